#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ikeda/fock.hpp"

namespace ikeda {

enum class Orientation { I, II };

struct BlockParams {
  double phi = 0.0;
  double kappa = 0.0;
  Orientation orientation = Orientation::I;
};

struct StabilizedPair {
  BlockParams block_I;
  BlockParams block_II;
  double delta = 0.0;
  double feedback_R = 0.0;

  // Phi = (phi_I + phi_II) / 2.
  double mean_phase() const { return 0.5 * (block_I.phi + block_II.phi); }
  double total_kappa() const { return block_I.kappa + block_II.kappa; }
};

struct RevivalInfo {
  bool is_revival = false;
  long m = 0;
  long l = 0;
  double tolerance = 0.0;
};

// One rotated coherent component: e^{i(phi n + kappa n(n-1))}|beta> equals
// sum_k weight_k |beta e^{i angle_k}>.
struct Kitten {
  Complex weight;
  double angle;
};

// Photon-number conserving two-mode operator, stored as one dense block per
// sector N = m + n. Sector basis index k maps to (m, n) = (lo(N) + k, N - m).
class SectorOperator {
 public:
  explicit SectorOperator(FockCutoff cutoff);

  FockCutoff cutoff() const noexcept { return cutoff_; }
  int sector_count() const noexcept { return 2 * cutoff_.n_max() + 1; }
  int sector_low(int N) const noexcept;
  int sector_size(int N) const noexcept;

  Eigen::MatrixXcd& block(int N) { return blocks_[N]; }
  const Eigen::MatrixXcd& block(int N) const { return blocks_[N]; }

  TwoModeState apply(const TwoModeState& s) const;
  SectorOperator adjoint() const;
  double unitarity_deviation() const;
  // Full dim^2 x dim^2 matrix in the basis index m * dim + n.
  Eigen::MatrixXcd dense() const;

 private:
  FockCutoff cutoff_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

// exp(i angle (e^{i phase} a^dag b + e^{-i phase} b^dag a)), built by
// diagonalising the truncated generator in every sector. Heisenberg action:
// a -> cos(angle) a + i e^{i phase} sin(angle) b.
SectorOperator splitter_unitary(FockCutoff cutoff, double angle, double phase);
// The 50-50 arm transform of the block interferometers (angle pi/4, phase 0).
SectorOperator arm_splitter(FockCutoff cutoff);

class BlockUnitary {
 public:
  BlockUnitary(const BlockParams& p, FockCutoff cutoff);
  BlockUnitary(const BlockParams& p, const SectorOperator& arms);

  const BlockParams& params() const noexcept { return params_; }
  const SectorOperator& op() const noexcept { return op_; }
  double unitarity_deviation() const { return op_.unitarity_deviation(); }

  TwoModeState apply(const TwoModeState& s,
                     double leak_threshold = tol::kLeak) const;

 private:
  BlockParams params_;
  SectorOperator op_;
};

TwoModeState apply_block(const TwoModeState& s, const BlockParams& p,
                         double leak_threshold = tol::kLeak);
double block_generator_check(const BlockParams& p, FockCutoff cutoff);

// c-number image of arm_splitter: (c, d) = W (in1, in2).
Eigen::Matrix2cd arm_matrix();
// c-number form of a block: out = block_matrix(theta) * (in1, in2).
Eigen::Matrix2cd block_matrix(double theta, Orientation orientation);
// Unnormalised Kerr-arm intensity |b + i a|^2 (I) or |f + i e|^2 (II).
double kerr_arm_intensity(Orientation orientation, Complex in1, Complex in2);
Eigen::Vector2cd apply_block_classical(const BlockParams& p, Complex in1,
                                       Complex in2);

StabilizedPair stabilization_offsets(const BlockParams& block_I, double delta);

RevivalInfo revival_check(double kappa, double tolerance, int l_max = 64);
std::vector<Complex> revival_phase_table(double kappa, int count);
std::vector<Kitten> kitten_decomposition(double kappa, double linear_phase,
                                         double tolerance = 1e-9,
                                         int l_max = 64);

Complex mix_with_input(Complex alpha_fed, Complex alpha_in);
// Same quantity through a full-state 50-50 splitter on |fed> x |in>.
Complex mix_with_input_full(Complex alpha_fed, Complex alpha_in,
                            FockCutoff cutoff);

}  // namespace ikeda
