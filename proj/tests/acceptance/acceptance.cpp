// Acceptance battery: one PASS/FAIL line per criterion.
//   acceptance               run all criteria
//   acceptance --criterion N run criterion N only

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ikeda/classical.hpp"
#include "ikeda/control.hpp"
#include "ikeda/io.hpp"

using namespace ikeda;

namespace {

constexpr double pi = std::numbers::pi;
const Complex I1{0.0, 1.0};

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double divergence_rate(const MapConfig& cfg, Complex a, int n, int burn_in) {
  for (int k = 0; k < burn_in; ++k) a = step(cfg, a);
  const double d0 = 1e-9;
  Complex b = a + d0;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    a = step(cfg, a);
    b = step(cfg, b);
    const double d = std::abs(b - a);
    sum += std::log(d / d0);
    b = a + (b - a) * (d0 / d);
  }
  return sum / n;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Verdict chaotic_regime() {
  const Timer t;
  const MapConfig c = MapConfig::chaotic();
  const Trajectory tr = iterate(c, 0.0, 100000);
  const double lambda = lyapunov(c, 0.0, 100000, 1000);
  const double oracle = divergence_rate(c, 0.0, 10000, 1000);
  const double rel = std::abs(lambda - oracle) / std::abs(oracle);
  const double s = t.seconds();
  const bool ok = std::isfinite(tr.max_abs()) && lambda > 0.05 && rel < 0.2 && s < 5.0;
  return {ok, fmt("max|a| = %.4f, lambda = %.4f, divergence oracle = %.4f (rel %.3f), %.2f s",
                  tr.max_abs(), lambda, oracle, rel, s)};
}

Verdict stabilized_regime() {
  const Timer t;
  const MapConfig c = MapConfig::stabilized();
  const Trajectory tr = iterate(c, 0.0, 50);
  const Complex a50 = tr.points.back().a;
  const double residual = std::abs(step(c, a50) - a50);
  const FixedPointResult fp = fixed_point(c, a50);
  const double e1 = std::abs(fp.jacobian_eigenvalues.first);
  const double e2 = std::abs(fp.jacobian_eigenvalues.second);
  const double R = c.effective_R();
  const double in = std::abs(c.effective_input());
  const double mod = std::abs(fp.point);
  const double s = t.seconds();
  const bool ok = residual < 1e-6 && e1 < 1.0 && e2 < 1.0 && mod >= in / (1.0 + R) &&
                  mod <= in / (1.0 - R) && mod >= 4.545 && mod <= 5.556 && s < 1.0;
  return {ok, fmt("a* = (%.4f, %.4f), |a*| = %.4f in [%.3f, %.3f], residual after 50 = %.2e, "
                  "|eig| = %.3f, %.3f, %.3f s",
                  fp.point.real(), fp.point.imag(), mod, in / (1.0 + R), in / (1.0 - R), residual,
                  e1, e2, s)};
}

Verdict stability_boundary() {
  const Timer t;
  ScanOptions o;
  o.workers = workers();
  const auto rows = scan(MapConfig::stabilized(), ScanParameter::R, 0.05, 0.7, 66, o);
  int changes = 0;
  double first = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if ((rows[i - 1].lambda > 0.0) != (rows[i].lambda > 0.0)) {
      if (changes == 0) first = 0.5 * (rows[i - 1].value + rows[i].value);
      ++changes;
    }
  }
  const double s = t.seconds();
  return {changes == 1 && s < 60.0,
          fmt("%d sign changes of lambda over %zu R values, first near R = %.3f, %.2f s", changes,
              rows.size(), first, s)};
}

Verdict revival_arithmetic() {
  const auto table = revival_phase_table(pi / 2, 21);
  double worst = 0.0;
  for (int n = 0; n <= 20; ++n) {
    worst = std::max(worst, std::abs(table[n] - (n % 2 == 0 ? Complex(1.0) : I1)));
  }
  const RevivalInfo r = revival_check(pi / 2, 1e-12);
  return {worst < 1e-12 && r.is_revival && r.m == 1 && r.l == 2,
          fmt("max deviation from 1, i, 1, i, ... = %.2e; (m, l) = (%ld, %ld)", worst, r.m, r.l)};
}

Verdict cat_generation() {
  const Timer t;
  const StabilizedPair p = LoopConfig::preset().pair;
  const FockCutoff cut(60);
  const ForwardModel model(p, cut);
  const double Phi = p.mean_phase();
  double worst_unitarity = model.unitarity_deviation();
  double worst_leak = 0.0;
  std::vector<double> f;
  std::string detail;
  for (double a : {2.0, 3.0, 4.0}) {
    const TwoModeState s = model.forward(a);
    worst_leak = std::max(worst_leak, leak_fraction(s));
    f.push_back(fidelity_to_cat(s, a, Phi));
    const CatCalibration c = calibrate_cat_phases(s, a, Phi);
    detail += fmt("F(%.0f) = %.4g (calibrated %.4g); ", a, f.back(), c.fidelity);
  }
  const double s = t.seconds();
  const bool ok = f[2] >= 0.98 && f[0] < f[1] && f[1] < f[2] && worst_unitarity < 1e-10 &&
                  worst_leak < 1e-8 && s < 30.0;
  return {ok, detail + fmt("unitarity %.1e, leak %.1e, %.2f s", worst_unitarity, worst_leak, s)};
}

Verdict herald_probability() {
  const StabilizedPair p = LoopConfig::preset().pair;
  const double Phi = p.mean_phase();
  bool ok = true;
  std::string detail;
  for (double a : {2.0, 3.0, 4.0}) {
    const FockCutoff cut = auto_cutoff(a);
    const Complex b1 = cat_regular_r(a, Phi), b2 = cat_herald(a, Phi);
    const Collapse c = conditional_collapse(ideal_cat(a, Phi, cut), b2);
    // Two-branch overlap bound on |p - 1/2|.
    const double correction = 2.0 * std::exp(-0.5 * std::norm(b1 - b2));
    const bool pass = std::abs(c.probability - 0.5) <= correction;
    ok = ok && pass;
    const double forward = quantum_step(LoopConfig::preset(), a).success_prob;
    detail += fmt("alpha %.0f: p = %.6f, bound %.2e, forward-pass herald p = %.4f; ", a,
                  c.probability, correction, forward);
  }
  return {ok, detail};
}

Verdict loop_stabilization() {
  const LoopConfig cfg = LoopConfig::preset();
  const QuantumTrajectory q = run_loop(cfg);
  MapConfig m;
  m.variant = MapVariant::composite;
  m.a_in = cfg.alpha_in;
  m.phi = cfg.pair.block_I.phi;
  m.kappa = cfg.pair.total_kappa();
  m.delta = cfg.pair.delta;
  m.input_norm = InputNorm::half_power;
  const Trajectory c = iterate(m, cfg.alpha0, cfg.iterations);
  const auto qa = q.alphas();
  double worst = 0.0, C = 0.0;
  for (std::size_t j = 0; j < qa.size(); ++j) {
    const double err = std::abs(qa[j] - c.points[j].a);
    worst = std::max(worst, err);
    if (std::abs(qa[j]) >= 3.0) C = std::max(C, err * std::abs(qa[j]));
  }
  std::optional<FixedPointResult> fp;
  for (Complex guess : {m.effective_input(), c.points.back().a, qa.back()}) {
    try {
      fp = fixed_point(m, guess);
      break;
    } catch (const NoConvergence&) {
    }
  }
  const double terminal = fp ? std::abs(qa.back() - fp->point) : INFINITY;
  const std::string fp_text =
      fp ? fmt("terminal distance to a* = %.4f (a* %s)", terminal, fp->stable ? "stable" : "unstable")
         : std::string("classical map has no fixed point reachable by Newton");
  return {worst <= 0.05 && terminal <= 0.05,
          fmt("max per-step |quantum - classical| = %.4f, ", worst) + fp_text +
              fmt(", classical end |a| = %.4f vs quantum %.4f, fitted C = %.3f",
                  std::abs(c.points.back().a), std::abs(qa.back()), C)};
}

Verdict unconditional_failure() {
  const Timer t;
  LoopConfig cfg = LoopConfig::preset();
  cfg.mode = LoopMode::unconditional;
  cfg.seed = 0;
  std::vector<std::uint64_t> seeds(100);
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = 1000 + k;
  const auto runs = run_ensemble(cfg, seeds, workers());
  int crossed = 0, regular = 0;
  double expected = 0.0, variance = 0.0;
  for (const auto& r : runs) {
    crossed += r.crossed_boundary();
    for (const auto& s : r.steps) {
      regular += s.outcome.branch == BranchKind::regular;
      expected += s.outcome.regular_weight;
      variance += s.outcome.regular_weight * (1.0 - s.outcome.regular_weight);
    }
  }
  const double z = (regular - expected) / std::sqrt(variance);
  const bool cond_crossed = run_loop(LoopConfig::preset()).crossed_boundary();
  const bool ok = std::abs(z) <= 3.0 && crossed > 0 && !cond_crossed;
  return {ok, fmt("regular branches %d vs %.1f expected (z = %.2f); %d/100 unconditional runs "
                  "cross radius %.4f; conditional crosses: %s; %.1f s",
                  regular, expected, z, crossed, cfg.boundary_radius(),
                  cond_crossed ? "yes" : "no", t.seconds())};
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool csv_round_trips(const io::CsvTable& t) {
  std::stringstream ss;
  io::write_csv(ss, t);
  const std::string first = ss.str();
  const io::CsvTable back = io::read_csv(ss);
  std::stringstream again;
  io::write_csv(again, back);
  if (again.str() != first || back.rows != t.rows) return false;
  for (const auto& row : back.rows) {
    for (const auto& cell : row) {
      if (cell.empty() || cell == "regular" || cell == "chaotic_side") continue;
      if (io::format_double(io::parse_double(cell)) != cell) return false;
    }
  }
  return true;
}

Verdict numerics_hygiene() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_jac = 0.0;
  const MapVariant variants[] = {MapVariant::single_block, MapVariant::ikeda_limit,
                                 MapVariant::composite};
  for (int k = 0; k < 100; ++k) {
    MapConfig c;
    c.variant = variants[k % 3];
    c.a_in = {10.0 * u(rng) - 5.0, 10.0 * u(rng) - 5.0};
    c.phi = 2.0 * pi * u(rng);
    c.kappa = 0.3 * u(rng);
    c.feedback_R = 0.7 * u(rng);
    c.delta = 0.05 + 1.5 * u(rng);
    const Complex a{8.0 * u(rng) - 4.0, 8.0 * u(rng) - 4.0};
    const Eigen::Matrix2d J = jacobian(c, a);
    const double h = 1e-6;
    for (int col = 0; col < 2; ++col) {
      const Complex d = col == 0 ? Complex(h, 0.0) : Complex(0.0, h);
      const Complex fd = (step(c, a + d) - step(c, a - d)) / (2.0 * h);
      const double e0 = std::abs(J(0, col) - fd.real()) / std::max(1.0, std::abs(J(0, col)));
      const double e1 = std::abs(J(1, col) - fd.imag()) / std::max(1.0, std::abs(J(1, col)));
      worst_jac = std::max({worst_jac, e0, e1});
    }
  }

  MapConfig lin;
  lin.variant = MapVariant::ikeda_limit;
  lin.a_in = {3.0, -1.0};
  lin.phi = 1.1;
  lin.feedback_R = 0.6;
  const Complex a0{0.5, 2.0};
  const Trajectory tr = iterate(lin, a0, 50);
  const Complex z = 0.6 * std::exp(I1 * 1.1), in = lin.a_in / std::sqrt(2.0);
  double worst_closed = 0.0;
  for (int j = 0; j <= 50; ++j) {
    const Complex zj = std::pow(z, j);
    worst_closed = std::max(worst_closed, std::abs(tr.points[j].a - (in * (1.0 - zj) / (1.0 - z) + zj * a0)));
  }

  LoopConfig lc = LoopConfig::preset();
  lc.iterations = 3;
  ScanOptions so;
  so.iterations = 2000;
  const bool csv_ok =
      csv_round_trips(io::trajectory_table(iterate(MapConfig::chaotic(), 0.0, 2000))) &&
      csv_round_trips(io::trajectory_table(run_loop(lc))) &&
      csv_round_trips(io::qgrid_table(husimi_q(pure_density(make_coherent({1.0, 0.5}, FockCutoff(20))),
                                               {-3, 3, -3, 3}, 31, 31))) &&
      csv_round_trips(io::scan_table(ScanParameter::R, scan(MapConfig::stabilized(), ScanParameter::R, 0.05, 0.5, 4, so)));
  return {worst_jac < 1e-6 && worst_closed < 1e-10 && csv_ok,
          fmt("Jacobian vs finite differences %.2e, kappa = 0 closed form %.2e, CSV round trip %s",
              worst_jac, worst_closed, csv_ok ? "bit-exact" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"chaotic regime", chaotic_regime},
      {"stabilized regime", stabilized_regime},
      {"stability boundary", stability_boundary},
      {"revival arithmetic", revival_arithmetic},
      {"cat-state generation", cat_generation},
      {"conditional-measurement probability", herald_probability},
      {"conditional loop stabilization", loop_stabilization},
      {"unconditional failure mode", unconditional_failure},
      {"numerics hygiene", numerics_hygiene},
  };

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<int>(k) + 1 != only) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
