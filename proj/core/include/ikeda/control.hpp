#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ikeda/fock.hpp"
#include "ikeda/optics.hpp"

namespace ikeda {

enum class LoopMode { conditional, unconditional };
enum class BranchKind { regular, chaotic_side };

std::string to_string(LoopMode m);
std::string to_string(BranchKind b);
LoopMode parse_loop_mode(const std::string& s);
BranchKind parse_branch_kind(const std::string& s);

struct LoopConfig {
  StabilizedPair pair;
  Complex alpha_in{5.0, 0.0};
  Complex alpha0{0.0, 0.0};
  // Unset: size the cutoff from |alpha_j| at every step.
  std::optional<FockCutoff> cutoff;
  int iterations = 30;
  LoopMode mode = LoopMode::conditional;
  std::optional<std::uint64_t> seed;
  std::optional<double> chaos_boundary_radius;
  double leak_threshold = tol::kLeak;
  // Run the truncated Fock simulation each step (fidelity, leak). Always on
  // in conditional mode.
  bool simulate_state = true;

  // kappa_I = kappa_II = pi/4 with phi_I and R = sin(delta)/sqrt2.
  static LoopConfig preset(double phi_I = 0.4, double R = 0.1);

  void validate() const;
  // Explicit radius, or |alpha_in/sqrt2| / (1 - R): the disk the regular
  // feedback keeps invariant.
  double boundary_radius() const;
  FockCutoff cutoff_for(Complex alpha) const;
};

// Cutoff with margin for the loop: sizing rule + 10, rounded up to a
// multiple of 10.
FockCutoff auto_cutoff(double abs_alpha);

struct StepOutcome {
  Complex alpha_next;
  double success_prob = 1.0;
  BranchKind branch = BranchKind::regular;
  double fidelity_to_cat = 0.0;
  double leak = 0.0;
  Complex herald;
  Complex fed;
  double regular_weight = 0.0;
  int n_max = 0;
};

struct QuantumStep {
  int j = 0;
  Complex alpha;
  StepOutcome outcome;
};

struct QuantumTrajectory {
  std::vector<QuantumStep> steps;
  LoopConfig config;
  double expected_trials = 1.0;

  double max_abs_alpha() const;
  bool crossed_boundary() const;
  std::vector<Complex> alphas() const;  // alpha_0 .. alpha_n
};

// One term of the exact two-block output for input |alpha>|0>:
// |out> = sum weight |r>_r |q>_q.
struct Branch {
  Complex weight;
  Complex r;
  Complex q;
  BranchKind kind;
};

std::vector<Branch> output_branches(Complex alpha, const StabilizedPair& pair);
TwoModeState branch_state(const std::vector<Branch>& branches,
                          FockCutoff cutoff);
// c-number r output of the two blocks for input (alpha, 0).
Complex classical_r(Complex alpha, const StabilizedPair& pair);

// Regular-branch amplitudes of the cat (r-state alpha e^{iPhi} cos Phi is
// heralded by q-state -i alpha e^{iPhi} sin Phi).
Complex cat_regular_r(Complex alpha, double Phi);
Complex cat_herald(Complex alpha, double Phi);

TwoModeState ideal_cat(Complex alpha, double Phi, FockCutoff cutoff);
double fidelity_to_cat(const TwoModeState& s, Complex alpha, double Phi);

struct CatCalibration {
  double fidelity = 0.0;
  double chi_r = 0.0;
  double chi_q = 0.0;
};

// Best fidelity to the cat over mode-local rotations e^{i(chi_r n_r + chi_q n_q)}
// applied to s; grid search followed by pattern refinement.
CatCalibration calibrate_cat_phases(const TwoModeState& s, Complex alpha,
                                    double Phi, int grid = 64);

class ForwardModel {
 public:
  ForwardModel(const StabilizedPair& pair, FockCutoff cutoff);

  TwoModeState forward(Complex alpha, double leak_threshold = tol::kLeak) const;
  FockCutoff cutoff() const noexcept { return cutoff_; }
  double unitarity_deviation() const;

 private:
  FockCutoff cutoff_;
  BlockUnitary block_I_;
  BlockUnitary block_II_;
};

// Block unitaries per cutoff, built on first use and shared read-only.
class ModelCache {
 public:
  explicit ModelCache(StabilizedPair pair) : pair_(pair) {}
  std::shared_ptr<const ForwardModel> get(FockCutoff cutoff);

 private:
  StabilizedPair pair_;
  std::mutex mu_;
  std::map<int, std::shared_ptr<const ForwardModel>> models_;
};

TwoModeState forward_pass(Complex alpha, const StabilizedPair& pair,
                          FockCutoff cutoff,
                          double leak_threshold = tol::kLeak);

struct Collapse {
  ModeState state;
  double probability = 0.0;
};

// Projects the mode labelled q_label onto |beta_target>; the partner mode's
// normalized state and the success probability are returned.
Collapse conditional_collapse(const TwoModeState& s, Complex beta_target,
                              const std::string& q_label = "q");

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

StepOutcome quantum_step(const LoopConfig& cfg, Complex alpha_j,
                         std::mt19937_64* rng = nullptr,
                         ModelCache* cache = nullptr);
QuantumTrajectory run_loop(const LoopConfig& cfg,
                           std::shared_ptr<ModelCache> cache = nullptr);
std::vector<QuantumTrajectory> run_ensemble(
    const LoopConfig& cfg, const std::vector<std::uint64_t>& seeds,
    int workers = 1);

}  // namespace ikeda
