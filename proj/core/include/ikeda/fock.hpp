#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ikeda/errors.hpp"

namespace ikeda {

using Complex = std::complex<double>;

namespace tol {
inline constexpr double kNorm = 1e-12;
inline constexpr double kUnitarity = 1e-10;
inline constexpr double kLeak = 1e-8;
inline constexpr double kTailError = 1e-6;
}  // namespace tol

class FockCutoff {
 public:
  explicit FockCutoff(int n_max);

  int n_max() const noexcept { return n_max_; }
  int dim() const noexcept { return n_max_ + 1; }

  // n_max >= |alpha|^2 + 6|alpha|, the documented sizing rule.
  static FockCutoff for_amplitude(double abs_alpha);
  bool adequate_for(double abs_alpha) const noexcept;

  friend bool operator==(FockCutoff a, FockCutoff b) noexcept {
    return a.n_max_ == b.n_max_;
  }

 private:
  int n_max_;
};

struct ModeState {
  Eigen::VectorXcd amps;
  FockCutoff cutoff{0};
  // Population discarded by truncation when the state was built (coherent
  // states only; zero otherwise).
  double tail_population = 0.0;

  double norm_squared() const { return amps.squaredNorm(); }
  bool is_normalized() const;
  ModeState normalized() const;
};

// Amplitude matrix indexed (mode-1 level, mode-2 level).
struct TwoModeState {
  Eigen::MatrixXcd amps;
  FockCutoff cutoff{0};
  std::array<std::string, 2> labels{"a", "b"};

  double norm_squared() const { return amps.squaredNorm(); }
  bool is_normalized() const;
  TwoModeState normalized() const;
  // 0 for mode 1, 1 for mode 2; throws UnknownMode.
  int mode_index(const std::string& label) const;
};

struct DensityOperator {
  Eigen::MatrixXcd matrix;
  FockCutoff cutoff{0};

  double trace() const { return matrix.trace().real(); }
  double purity() const;
  bool is_hermitian(double tolerance = tol::kNorm) const;
  double min_eigenvalue() const;
};

struct PhaseWindow {
  double re_min = -1.0;
  double re_max = 1.0;
  double im_min = -1.0;
  double im_max = 1.0;
};

struct QGrid {
  PhaseWindow window;
  int n_re = 0;
  int n_im = 0;
  Eigen::MatrixXd values;  // values(i, j): i along Re(beta), j along Im(beta)

  Complex point(int i, int j) const;
  double cell_area() const;
  double integral() const { return values.sum() * cell_area(); }
};

enum class TailPolicy { enforce, allow };

double log_factorial(int n);

// Truncated Fock amplitudes e^{-|a|^2/2} a^n / sqrt(n!), not renormalized.
Eigen::VectorXcd coherent_amplitudes(Complex alpha, FockCutoff cutoff);
// Population of |alpha> above n_max, summed directly.
double coherent_tail(double abs_alpha, FockCutoff cutoff);
// <x|y> for untruncated coherent states.
Complex coherent_inner(Complex x, Complex y);

ModeState make_coherent(Complex alpha, FockCutoff cutoff,
                        TailPolicy policy = TailPolicy::enforce);
ModeState fock_state(int n, FockCutoff cutoff);
ModeState vacuum(FockCutoff cutoff);

TwoModeState tensor_product(const ModeState& u, const ModeState& v,
                            std::array<std::string, 2> labels = {"a", "b"});
Complex overlap(const TwoModeState& s1, const TwoModeState& s2);
Complex overlap(const ModeState& s1, const ModeState& s2);

DensityOperator reduce_mode(const TwoModeState& s, const std::string& keep);
DensityOperator pure_density(const ModeState& s);

Complex mean_field(const TwoModeState& s, const std::string& mode);
Complex mean_field(const ModeState& s);
double mean_photon_number(const ModeState& s);

QGrid husimi_q(const DensityOperator& rho, const PhaseWindow& window, int n_re,
               int n_im);

// Population in the top two Fock levels of either mode.
double leak_fraction(const TwoModeState& s);
double leak_fraction(const ModeState& s);

}  // namespace ikeda
