#include "ikeda/control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ikeda {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr double kRevivalTolerance = 1e-9;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

std::string to_string(LoopMode m) {
  return m == LoopMode::conditional ? "conditional" : "unconditional";
}

std::string to_string(BranchKind b) {
  return b == BranchKind::regular ? "regular" : "chaotic_side";
}

LoopMode parse_loop_mode(const std::string& s) {
  if (s == "conditional") return LoopMode::conditional;
  if (s == "unconditional") return LoopMode::unconditional;
  throw std::invalid_argument("unknown loop mode '" + s + "'");
}

BranchKind parse_branch_kind(const std::string& s) {
  if (s == "regular") return BranchKind::regular;
  if (s == "chaotic_side") return BranchKind::chaotic_side;
  throw std::invalid_argument("unknown branch '" + s + "'");
}

LoopConfig LoopConfig::preset(double phi_I, double R) {
  LoopConfig cfg;
  const BlockParams block_I{phi_I, kPi / 4.0, Orientation::I};
  cfg.pair = stabilization_offsets(block_I, std::asin(std::sqrt(2.0) * R));
  return cfg;
}

void LoopConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (chaos_boundary_radius && !(*chaos_boundary_radius > 0.0)) {
    throw std::invalid_argument("chaos_boundary_radius must be > 0");
  }
  if (!(leak_threshold > 0.0)) throw std::invalid_argument("leak threshold must be > 0");
  if (!finite(alpha_in) || !finite(alpha0)) {
    throw std::invalid_argument("loop amplitudes must be finite");
  }
  if (std::abs(pair.block_I.kappa - pair.block_II.kappa) > 1e-12) {
    throw std::invalid_argument("stabilized pair needs kappa_I = kappa_II");
  }
  if (std::abs(0.5 * (pair.block_I.phi - pair.block_II.phi) - (kPi / 2.0 - pair.delta)) >
      1e-12) {
    throw std::invalid_argument("stabilized pair violates (phi_I - phi_II)/2 = pi/2 - delta");
  }
}

double LoopConfig::boundary_radius() const {
  if (chaos_boundary_radius) return *chaos_boundary_radius;
  return std::abs(alpha_in) / std::sqrt(2.0) / (1.0 - pair.feedback_R);
}

FockCutoff auto_cutoff(double abs_alpha) {
  const double need = abs_alpha * abs_alpha + 6.0 * abs_alpha + 10.0;
  return FockCutoff(std::max(20, 10 * static_cast<int>(std::ceil(need / 10.0))));
}

FockCutoff LoopConfig::cutoff_for(Complex alpha) const {
  return cutoff ? *cutoff : auto_cutoff(std::abs(alpha));
}

double QuantumTrajectory::max_abs_alpha() const {
  double m = std::abs(config.alpha0);
  for (const auto& s : steps) m = std::max(m, std::abs(s.outcome.alpha_next));
  return m;
}

bool QuantumTrajectory::crossed_boundary() const {
  return max_abs_alpha() > config.boundary_radius();
}

std::vector<Complex> QuantumTrajectory::alphas() const {
  std::vector<Complex> out{config.alpha0};
  for (const auto& s : steps) out.push_back(s.outcome.alpha_next);
  return out;
}

std::vector<Branch> output_branches(Complex alpha, const StabilizedPair& pair) {
  const auto kittens_I = kitten_decomposition(pair.block_I.kappa, pair.block_I.phi);
  const auto kittens_II = kitten_decomposition(pair.block_II.kappa, pair.block_II.phi);
  const Eigen::Matrix2cd w = arm_matrix();
  const Eigen::Vector2cd arms = w * Eigen::Vector2cd(alpha, 0.0);

  std::vector<Branch> out;
  out.reserve(kittens_I.size() * kittens_II.size());
  for (const Kitten& a : kittens_I) {
    const Eigen::Vector2cd after_I =
        w.adjoint() * Eigen::Vector2cd(kI * arms(0), kI * std::polar(1.0, a.angle) * arms(1));
    const Eigen::Vector2cd arms_II = w * after_I;
    for (const Kitten& b : kittens_II) {
      const Eigen::Vector2cd rq = w.adjoint() *
          Eigen::Vector2cd(kI * std::polar(1.0, b.angle) * arms_II(0), kI * arms_II(1));
      // Regular: both arms picked up the same Kerr rotation.
      const double kerr_mismatch = std::remainder(
          (a.angle - pair.block_I.phi) - (b.angle - pair.block_II.phi), 2.0 * kPi);
      const BranchKind kind = std::abs(kerr_mismatch) < 1e-9 ? BranchKind::regular
                                                             : BranchKind::chaotic_side;
      out.push_back({a.weight * b.weight, rq(0), rq(1), kind});
    }
  }
  return out;
}

TwoModeState branch_state(const std::vector<Branch>& branches, FockCutoff cutoff) {
  TwoModeState s;
  s.cutoff = cutoff;
  s.labels = {"r", "q"};
  s.amps = Eigen::MatrixXcd::Zero(cutoff.dim(), cutoff.dim());
  for (const Branch& b : branches) {
    s.amps += b.weight * coherent_amplitudes(b.r, cutoff) *
              coherent_amplitudes(b.q, cutoff).transpose();
  }
  return s;
}

Complex classical_r(Complex alpha, const StabilizedPair& pair) {
  const Eigen::Vector2cd mid = apply_block_classical(pair.block_I, alpha, 0.0);
  return apply_block_classical(pair.block_II, mid(0), mid(1))(0);
}

Complex cat_regular_r(Complex alpha, double Phi) {
  return alpha * std::polar(1.0, Phi) * std::cos(Phi);
}

Complex cat_herald(Complex alpha, double Phi) {
  return -kI * alpha * std::polar(1.0, Phi) * std::sin(Phi);
}

TwoModeState ideal_cat(Complex alpha, double Phi, FockCutoff cutoff) {
  const Complex b1 = cat_regular_r(alpha, Phi);
  const Complex b2 = cat_herald(alpha, Phi);
  const ModeState s1 = make_coherent(b1, cutoff);
  const ModeState s2 = make_coherent(b2, cutoff);
  TwoModeState cat;
  cat.cutoff = cutoff;
  cat.labels = {"r", "q"};
  // Mode 1 is r, mode 2 is q.
  cat.amps = std::polar(1.0, -kPi / 4.0) * s2.amps * s1.amps.transpose() +
             std::polar(1.0, kPi / 4.0) * s1.amps * s2.amps.transpose();
  return cat.normalized();
}

double fidelity_to_cat(const TwoModeState& s, Complex alpha, double Phi) {
  const TwoModeState cat = ideal_cat(alpha, Phi, s.cutoff);
  const double f = std::norm(overlap(cat, s)) / (cat.norm_squared() * s.norm_squared());
  return std::clamp(f, 0.0, 1.0);
}

CatCalibration calibrate_cat_phases(const TwoModeState& s, Complex alpha,
                                    double Phi, int grid) {
  const TwoModeState cat = ideal_cat(alpha, Phi, s.cutoff);
  const Eigen::MatrixXcd m = cat.amps.conjugate().cwiseProduct(s.amps);
  const double norm = cat.norm_squared() * s.norm_squared();
  const int dim = s.cutoff.dim();
  auto phases = [dim](double chi) {
    Eigen::VectorXcd u(dim);
    for (int n = 0; n < dim; ++n) u(n) = std::polar(1.0, chi * n);
    return u;
  };
  auto fidelity = [&](double chi_r, double chi_q) {
    return std::norm((phases(chi_r).transpose() * m * phases(chi_q)).value()) / norm;
  };

  CatCalibration best;
  best.fidelity = -1.0;
  for (int i = 0; i < grid; ++i) {
    const double chi_r = 2.0 * kPi * i / grid;
    const Eigen::RowVectorXcd row = phases(chi_r).transpose() * m;
    for (int j = 0; j < grid; ++j) {
      const double chi_q = 2.0 * kPi * j / grid;
      const double f = std::norm((row * phases(chi_q)).value()) / norm;
      if (f > best.fidelity) best = {f, chi_r, chi_q};
    }
  }
  for (double h = 2.0 * kPi / grid; h > 1e-10; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& [dr, dq] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double f = fidelity(best.chi_r + dr, best.chi_q + dq);
        if (f > best.fidelity) {
          best = {f, best.chi_r + dr, best.chi_q + dq};
          moved = true;
        }
      }
    }
  }
  best.chi_r = std::remainder(best.chi_r, 2.0 * kPi);
  best.chi_q = std::remainder(best.chi_q, 2.0 * kPi);
  best.fidelity = std::clamp(best.fidelity, 0.0, 1.0);
  return best;
}

ForwardModel::ForwardModel(const StabilizedPair& pair, FockCutoff cutoff)
    : cutoff_(cutoff),
      block_I_(pair.block_I, arm_splitter(cutoff)),
      block_II_(pair.block_II, arm_splitter(cutoff)) {}

TwoModeState ForwardModel::forward(Complex alpha, double leak_threshold) const {
  TwoModeState s = tensor_product(make_coherent(alpha, cutoff_), vacuum(cutoff_),
                                  {"a", "b"});
  s = block_I_.apply(s, leak_threshold);
  s.labels = {"f", "e"};
  s = block_II_.apply(s, leak_threshold);
  s.labels = {"r", "q"};
  return s;
}

double ForwardModel::unitarity_deviation() const {
  return std::max(block_I_.unitarity_deviation(), block_II_.unitarity_deviation());
}

std::shared_ptr<const ForwardModel> ModelCache::get(FockCutoff cutoff) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = models_.find(cutoff.n_max());
  if (it != models_.end()) return it->second;
  auto model = std::make_shared<const ForwardModel>(pair_, cutoff);
  models_.emplace(cutoff.n_max(), model);
  return model;
}

TwoModeState forward_pass(Complex alpha, const StabilizedPair& pair,
                          FockCutoff cutoff, double leak_threshold) {
  return ForwardModel(pair, cutoff).forward(alpha, leak_threshold);
}

Collapse conditional_collapse(const TwoModeState& s, Complex beta_target,
                              const std::string& q_label) {
  const int q = s.mode_index(q_label);
  const Eigen::VectorXcd h = make_coherent(beta_target, s.cutoff).amps.conjugate();
  Eigen::VectorXcd v = q == 1 ? Eigen::VectorXcd(s.amps * h)
                              : Eigen::VectorXcd(s.amps.transpose() * h);
  const double p = v.squaredNorm();
  if (p < 1e-15) throw ZeroProbability(p);
  Collapse c;
  c.probability = std::min(p, 1.0);
  c.state.cutoff = s.cutoff;
  c.state.amps = v / std::sqrt(p);
  return c;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

StepOutcome quantum_step(const LoopConfig& cfg, Complex alpha_j,
                         std::mt19937_64* rng, ModelCache* cache) {
  const bool conditional = cfg.mode == LoopMode::conditional;
  if (!conditional && rng == nullptr) {
    throw std::invalid_argument("unconditional step needs a random stream");
  }
  const FockCutoff cut = cfg.cutoff_for(alpha_j);
  const double Phi = cfg.pair.mean_phase();
  StepOutcome out;
  out.n_max = cut.n_max();

  const std::vector<Branch> branches = output_branches(alpha_j, cfg.pair);
  for (const Branch& b : branches) {
    if (b.kind == BranchKind::regular) out.regular_weight += std::norm(b.weight);
  }

  TwoModeState state;
  if (conditional || cfg.simulate_state) {
    std::shared_ptr<const ForwardModel> model =
        cache ? cache->get(cut) : std::make_shared<const ForwardModel>(cfg.pair, cut);
    state = model->forward(alpha_j, cfg.leak_threshold);
    out.leak = leak_fraction(state);
    out.fidelity_to_cat = fidelity_to_cat(state, alpha_j, Phi);
  } else {
    out.leak = std::numeric_limits<double>::quiet_NaN();
    out.fidelity_to_cat = std::numeric_limits<double>::quiet_NaN();
  }

  if (conditional) {
    // Herald the regular branch whose r amplitude sits closest to the
    // c-number prediction.
    const Complex r_cl = classical_r(alpha_j, cfg.pair);
    const Branch* best = nullptr;
    for (const Branch& b : branches) {
      if (b.kind != BranchKind::regular) continue;
      if (best == nullptr || std::abs(b.r - r_cl) < std::abs(best->r - r_cl)) best = &b;
    }
    out.herald = best->q;
    const Collapse c = conditional_collapse(state, out.herald, "q");
    out.success_prob = c.probability;
    out.fed = mean_field(c.state);
    out.branch = BranchKind::regular;
  } else {
    double total = 0.0;
    for (const Branch& b : branches) total += std::norm(b.weight);
    const double u = uniform01(*rng) * total;
    const Branch* chosen = &branches.back();
    double acc = 0.0;
    for (const Branch& b : branches) {
      acc += std::norm(b.weight);
      if (u < acc) {
        chosen = &b;
        break;
      }
    }
    out.herald = chosen->q;
    out.fed = chosen->r;
    out.branch = chosen->kind;
    out.success_prob = 1.0;
  }
  out.alpha_next = mix_with_input(out.fed, cfg.alpha_in);
  return out;
}

QuantumTrajectory run_loop(const LoopConfig& cfg, std::shared_ptr<ModelCache> cache) {
  cfg.validate();
  if (cfg.mode == LoopMode::unconditional && !cfg.seed) {
    throw std::invalid_argument("unconditional mode requires a seed");
  }
  if (!revival_check(cfg.pair.total_kappa(), kRevivalTolerance).is_revival) {
    throw RevivalRequired(cfg.pair.total_kappa());
  }
  if (!cache) cache = std::make_shared<ModelCache>(cfg.pair);
  std::mt19937_64 rng(cfg.seed.value_or(0));

  QuantumTrajectory traj;
  traj.config = cfg;
  traj.steps.reserve(cfg.iterations);
  Complex alpha = cfg.alpha0;
  for (int j = 0; j < cfg.iterations; ++j) {
    StepOutcome out = quantum_step(cfg, alpha, &rng, cache.get());
    if (!finite(out.alpha_next)) throw NonFinite(static_cast<std::size_t>(j + 1));
    traj.expected_trials /= out.success_prob;
    traj.steps.push_back({j, alpha, out});
    alpha = out.alpha_next;
  }
  return traj;
}

std::vector<QuantumTrajectory> run_ensemble(const LoopConfig& cfg,
                                            const std::vector<std::uint64_t>& seeds,
                                            int workers) {
  auto cache = std::make_shared<ModelCache>(cfg.pair);
  std::vector<QuantumTrajectory> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  auto run_one = [&](std::size_t i) {
    try {
      LoopConfig c = cfg;
      c.seed = seeds[i];
      out[i] = run_loop(c, cache);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int n = static_cast<int>(seeds.size());
  const int pool_size = std::clamp(workers, 1, std::max(1, n));
  if (pool_size == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < pool_size; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run_one(static_cast<std::size_t>(i));
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace ikeda
