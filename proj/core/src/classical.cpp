#include "ikeda/classical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ikeda {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// The map is F(a) = A + h(s) a with s = |a|^2; returns (h, dh/ds).
std::pair<Complex, Complex> feedback(const MapConfig& cfg, double s) {
  switch (cfg.variant) {
    case MapVariant::single_block: {
      const Complex e = std::polar(1.0, cfg.phi + cfg.kappa * s);
      const double c = 0.5 * kInvSqrt2;
      return {kI * c * (e + 1.0), -c * cfg.kappa * e};
    }
    case MapVariant::ikeda_limit: {
      const Complex h = std::polar(cfg.feedback_R, cfg.phi + 0.5 * cfg.kappa * s);
      return {h, kI * 0.5 * cfg.kappa * h};
    }
    case MapVariant::composite: {
      const Complex h = -std::polar(std::sin(cfg.delta) * kInvSqrt2,
                                    cfg.composite_phase() + 0.5 * cfg.kappa * s);
      return {h, kI * 0.5 * cfg.kappa * h};
    }
  }
  throw std::logic_error("unhandled map variant");
}

}  // namespace

std::string to_string(MapVariant v) {
  switch (v) {
    case MapVariant::single_block: return "single_block";
    case MapVariant::ikeda_limit: return "ikeda_limit";
    case MapVariant::composite: return "composite";
  }
  return "?";
}

std::string to_string(InputNorm n) {
  return n == InputNorm::unit ? "unit" : "half_power";
}

MapVariant parse_map_variant(const std::string& s) {
  if (s == "single_block") return MapVariant::single_block;
  if (s == "ikeda_limit") return MapVariant::ikeda_limit;
  if (s == "composite") return MapVariant::composite;
  throw std::invalid_argument("unknown map variant '" + s + "'");
}

InputNorm parse_input_norm(const std::string& s) {
  if (s == "half_power") return InputNorm::half_power;
  if (s == "unit") return InputNorm::unit;
  throw std::invalid_argument("unknown input norm '" + s + "'");
}

void MapConfig::validate() const {
  if (!finite(a_in) || !std::isfinite(phi) || !std::isfinite(kappa) ||
      !std::isfinite(feedback_R) || !std::isfinite(delta)) {
    throw std::invalid_argument("map parameters must be finite");
  }
  if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
  if (variant == MapVariant::ikeda_limit &&
      (feedback_R < 0.0 || feedback_R > kInvSqrt2 + 1e-15)) {
    throw std::invalid_argument("feedback_R must lie in [0, 1/sqrt2]");
  }
  if (variant == MapVariant::composite && (delta < 0.0 || delta > kPi / 2.0)) {
    throw std::invalid_argument("delta must lie in [0, pi/2]");
  }
}

Complex MapConfig::effective_input() const {
  return input_norm == InputNorm::unit ? a_in : a_in * kInvSqrt2;
}

double MapConfig::effective_R() const {
  switch (variant) {
    case MapVariant::ikeda_limit: return feedback_R;
    case MapVariant::composite: return std::sin(delta) * kInvSqrt2;
    case MapVariant::single_block: break;
  }
  throw std::invalid_argument("single_block has an intensity-dependent feedback");
}

double MapConfig::composite_phase() const { return phi - kPi / 2.0 + delta; }

MapConfig MapConfig::chaotic() {
  MapConfig c;
  c.variant = MapVariant::single_block;
  c.a_in = {5.0, 0.0};
  c.phi = 2.0 * 0.4;
  c.kappa = 0.1;
  c.input_norm = InputNorm::unit;
  return c;
}

MapConfig MapConfig::stabilized() {
  MapConfig c;
  c.variant = MapVariant::composite;
  c.a_in = {5.0, 0.0};
  c.phi = 0.4;
  c.kappa = 0.2;
  c.delta = std::asin(0.1 * std::sqrt(2.0));
  c.input_norm = InputNorm::unit;
  return c;
}

double Trajectory::max_abs() const {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, std::abs(p.a));
  return m;
}

Complex step(const MapConfig& cfg, Complex a) {
  return cfg.effective_input() + feedback(cfg, std::norm(a)).first * a;
}

Eigen::Matrix2d jacobian(const MapConfig& cfg, Complex a) {
  const double s = std::norm(a);
  const auto [h, dh] = feedback(cfg, s);
  // Wirtinger derivatives of F = A + h(|a|^2) a.
  const Complex d_a = h + s * dh;
  const Complex d_abar = dh * a * a;
  const Complex dx = d_a + d_abar;
  const Complex dy = kI * (d_a - d_abar);
  Eigen::Matrix2d j;
  j << dx.real(), dy.real(), dx.imag(), dy.imag();
  if (!j.allFinite()) throw NonFinite(0);
  return j;
}

Trajectory iterate(const MapConfig& cfg, Complex a0, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("iterate needs n >= 1");
  cfg.validate();
  Trajectory t;
  t.config = cfg;
  t.points.reserve(static_cast<std::size_t>(n) + 1);
  t.points.push_back({0, a0});
  Complex a = a0;
  for (std::int64_t j = 1; j <= n; ++j) {
    a = step(cfg, a);
    if (!finite(a)) throw DivergedIterate(static_cast<std::size_t>(j), t);
    t.points.push_back({j, a});
  }
  return t;
}

double lyapunov(const MapConfig& cfg, Complex a0, std::int64_t n,
                std::int64_t burn_in) {
  if (burn_in < 0 || n - burn_in < 1000) {
    throw std::invalid_argument("lyapunov needs n - burn_in >= 1000");
  }
  cfg.validate();
  Complex a = a0;
  Eigen::Vector2d v(1.0, 0.0);
  double sum = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    v = jacobian(cfg, a) * v;
    a = step(cfg, a);
    if (!finite(a)) throw NonFinite(static_cast<std::size_t>(j + 1));
    const double len = v.norm();
    if (len == 0.0) return -std::numeric_limits<double>::infinity();
    if (j >= burn_in) sum += std::log(len);
    v /= len;
  }
  return sum / static_cast<double>(n - burn_in);
}

FixedPointResult fixed_point(const MapConfig& cfg, Complex guess) {
  cfg.validate();
  constexpr int kMaxSteps = 100;
  constexpr double kTol = 1e-10;
  Complex a = guess;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kMaxSteps; ++k) {
    const Complex g = step(cfg, a) - a;
    const double res = std::abs(g);
    if (!std::isfinite(res)) break;
    best = std::min(best, res);
    if (res < kTol) {
      FixedPointResult r;
      r.point = a;
      r.residual = res;
      r.newton_steps = k;
      Eigen::EigenSolver<Eigen::Matrix2d> es(jacobian(cfg, a), false);
      r.jacobian_eigenvalues = {es.eigenvalues()(0), es.eigenvalues()(1)};
      r.stable = std::abs(r.jacobian_eigenvalues.first) < 1.0 &&
                 std::abs(r.jacobian_eigenvalues.second) < 1.0;
      return r;
    }
    if (k == kMaxSteps) break;
    const Eigen::Matrix2d jg = jacobian(cfg, a) - Eigen::Matrix2d::Identity();
    const Eigen::Vector2d dx =
        jg.fullPivLu().solve(Eigen::Vector2d(-g.real(), -g.imag()));
    a += Complex(dx(0), dx(1));
  }
  throw NoConvergence(best, kMaxSteps);
}

std::string to_string(ScanParameter p) {
  switch (p) {
    case ScanParameter::R: return "R";
    case ScanParameter::delta: return "delta";
    case ScanParameter::kappa: return "kappa";
    case ScanParameter::phi: return "phi";
    case ScanParameter::a_in_magnitude: return "a_in_magnitude";
  }
  return "?";
}

ScanParameter parse_scan_parameter(const std::string& s) {
  if (s == "R") return ScanParameter::R;
  if (s == "delta") return ScanParameter::delta;
  if (s == "kappa") return ScanParameter::kappa;
  if (s == "phi") return ScanParameter::phi;
  if (s == "a_in_magnitude") return ScanParameter::a_in_magnitude;
  throw std::invalid_argument("unknown scan parameter '" + s + "'");
}

MapConfig with_parameter(MapConfig cfg, ScanParameter p, double value) {
  switch (p) {
    case ScanParameter::R:
      if (cfg.variant == MapVariant::ikeda_limit) {
        cfg.feedback_R = value;
      } else if (cfg.variant == MapVariant::composite) {
        if (value < 0.0 || value > kInvSqrt2) {
          throw std::invalid_argument("composite R must lie in [0, 1/sqrt2]");
        }
        cfg.delta = std::asin(std::min(1.0, std::sqrt(2.0) * value));
      } else {
        throw std::invalid_argument("single_block has no R parameter");
      }
      break;
    case ScanParameter::delta:
      if (cfg.variant == MapVariant::ikeda_limit) {
        cfg.feedback_R = std::sin(value) * kInvSqrt2;
      } else if (cfg.variant == MapVariant::composite) {
        cfg.delta = value;
      } else {
        throw std::invalid_argument("single_block has no delta parameter");
      }
      break;
    case ScanParameter::kappa: cfg.kappa = value; break;
    case ScanParameter::phi: cfg.phi = value; break;
    case ScanParameter::a_in_magnitude:
      cfg.a_in = std::abs(cfg.a_in) > 0.0 ? std::polar(value, std::arg(cfg.a_in))
                                          : Complex(value, 0.0);
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<ScanRow> scan(const MapConfig& cfg_template, ScanParameter p,
                          double lo, double hi, int steps,
                          const ScanOptions& options) {
  if (lo != hi && steps < 2) throw std::invalid_argument("scan needs steps >= 2");
  if (options.burn_in < 0 || options.iterations - options.burn_in < 1000) {
    throw std::invalid_argument("scan needs iterations - burn_in >= 1000");
  }
  const int count = lo == hi ? 1 : steps;
  std::vector<ScanRow> rows(count);
  for (int i = 0; i < count; ++i) {
    rows[i].value = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    // Reject bad grids before spawning workers.
    with_parameter(cfg_template, p, rows[i].value);
  }

  auto run_row = [&](ScanRow& row) {
    const MapConfig cfg = with_parameter(cfg_template, p, row.value);
    try {
      row.lambda = lyapunov(cfg, options.a0, options.iterations, options.burn_in);
    } catch (const NonFinite& e) {
      row.non_finite = true;
      row.lambda = std::numeric_limits<double>::quiet_NaN();
      row.error = e.what();
      return;
    }
    try {
      const FixedPointResult fp = fixed_point(cfg, cfg.effective_input());
      row.fp_found = true;
      row.fp_point = fp.point;
      row.fp_residual = fp.residual;
      row.fp_stable = fp.stable;
    } catch (const NoConvergence& e) {
      row.fp_residual = e.best_residual();
    } catch (const NonFinite& e) {
      row.non_finite = true;
      row.error = e.what();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  const int workers = std::clamp(options.workers, 1, count);
  if (workers == 1) {
    for (auto& row : rows) run_row(row);
    return rows;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) run_row(rows[i]);
    });
  }
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace ikeda
