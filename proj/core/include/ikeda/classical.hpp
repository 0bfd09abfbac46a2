#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ikeda/errors.hpp"
#include "ikeda/fock.hpp"

namespace ikeda {

enum class MapVariant { single_block, ikeda_limit, composite };
enum class InputNorm { half_power, unit };

std::string to_string(MapVariant v);
std::string to_string(InputNorm n);
MapVariant parse_map_variant(const std::string& s);
InputNorm parse_input_norm(const std::string& s);

// Variants:
//   single_block  a' = n a_in + (1/sqrt2) i e^{i theta/2} cos(theta/2) a,
//                 theta = phi + kappa |a|^2
//   ikeda_limit   a' = n a_in + R e^{i(phi + kappa |a|^2 / 2)} a
//   composite     a' = n a_in - (sin(delta)/sqrt2) e^{i(Phi' + kappa |a|^2 / 2)} a,
//                 Phi' = phi - pi/2 + delta, phi = phi_I, kappa = kappa_I + kappa_II
// with n = 1/sqrt2 (half_power) or 1 (unit) scaling the input term only.
struct MapConfig {
  MapVariant variant = MapVariant::ikeda_limit;
  Complex a_in{5.0, 0.0};
  double phi = 0.0;
  double kappa = 0.0;
  double feedback_R = 0.0;
  double delta = 0.0;
  InputNorm input_norm = InputNorm::half_power;

  void validate() const;
  Complex effective_input() const;
  // Magnitude of the linear feedback factor (ikeda_limit, composite).
  double effective_R() const;
  double composite_phase() const;

  // Chaotic single block at phi_I = 0.4, a_in = 5, kappa = 0.1.
  static MapConfig chaotic();
  // Stabilized composite at phi_I = 0.4, R = 0.1, kappa_I = kappa_II = 0.1.
  static MapConfig stabilized();
};

struct TrajPoint {
  std::int64_t j;
  Complex a;
};

struct Trajectory {
  std::vector<TrajPoint> points;
  MapConfig config;
  int burn_in = 0;

  double max_abs() const;
};

// Thrown by iterate(); carries the iterates computed before the failure.
class DivergedIterate : public NonFinite {
 public:
  DivergedIterate(std::size_t index, Trajectory partial)
      : NonFinite(index), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

struct FixedPointResult {
  Complex point;
  double residual = 0.0;
  std::pair<Complex, Complex> jacobian_eigenvalues;
  bool stable = false;
  int newton_steps = 0;
};

Complex step(const MapConfig& cfg, Complex a);
// Real Jacobian d(Re a', Im a') / d(Re a, Im a).
Eigen::Matrix2d jacobian(const MapConfig& cfg, Complex a);
Trajectory iterate(const MapConfig& cfg, Complex a0, std::int64_t n);
double lyapunov(const MapConfig& cfg, Complex a0, std::int64_t n,
                std::int64_t burn_in = 1000);
FixedPointResult fixed_point(const MapConfig& cfg, Complex guess);

enum class ScanParameter { R, delta, kappa, phi, a_in_magnitude };
std::string to_string(ScanParameter p);
ScanParameter parse_scan_parameter(const std::string& s);
MapConfig with_parameter(MapConfig cfg, ScanParameter p, double value);

struct ScanOptions {
  Complex a0{0.0, 0.0};
  std::int64_t iterations = 20000;
  std::int64_t burn_in = 1000;
  int workers = 1;
};

struct ScanRow {
  double value = 0.0;
  double lambda = 0.0;
  bool non_finite = false;
  bool fp_found = false;
  Complex fp_point;
  double fp_residual = 0.0;
  bool fp_stable = false;
  std::string error;
};

std::vector<ScanRow> scan(const MapConfig& cfg_template, ScanParameter p,
                          double lo, double hi, int steps,
                          const ScanOptions& options = {});

}  // namespace ikeda
