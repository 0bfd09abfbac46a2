#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ikeda/classical.hpp"

using namespace ikeda;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::Matrix2d finite_difference(const MapConfig& cfg, Complex a, double h = 1e-6) {
  Eigen::Matrix2d J;
  for (int col = 0; col < 2; ++col) {
    const Complex d = col == 0 ? Complex(h, 0.0) : Complex(0.0, h);
    const Complex diff = (step(cfg, a + d) - step(cfg, a - d)) / (2.0 * h);
    J(0, col) = diff.real();
    J(1, col) = diff.imag();
  }
  return J;
}

// Rate at which two nearby orbits separate, renormalizing the offset each step.
double divergence_rate(const MapConfig& cfg, Complex a0, int n, int burn_in) {
  Complex a = a0;
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

MapConfig ikeda_limit_map(double R, double phi, double kappa, Complex a_in) {
  MapConfig c;
  c.variant = MapVariant::ikeda_limit;
  c.feedback_R = R;
  c.phi = phi;
  c.kappa = kappa;
  c.a_in = a_in;
  return c;
}

}  // namespace

TEST_SUITE("classical") {

TEST_CASE("zero feedback is memoryless") {
  const MapConfig c = ikeda_limit_map(0.0, 1.0, 0.1, {5.0, 0.0});
  for (Complex a : {Complex(0.0), Complex(3.0, -2.0)}) {
    CHECK(step(c, a) == c.effective_input());
  }
  CHECK(jacobian(c, {1.0, 2.0}).norm() == 0.0);
  const double lambda = lyapunov(c, 0.0, 2000, 1000);
  CHECK((std::isinf(lambda) || lambda < -20.0));
  const FixedPointResult fp = fixed_point(c, 0.0);
  CHECK(fp.point == c.effective_input());
  CHECK(fp.stable);
}

TEST_CASE("linear Ikeda limit has determinant R^2") {
  const MapConfig c = ikeda_limit_map(0.3, 0.9, 0.0, {2.0, 1.0});
  const Eigen::Matrix2d J = jacobian(c, {1.0, -1.0});
  CHECK(J.determinant() == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(std::abs(J(0, 0) - J(1, 1)) < 1e-15);
  CHECK(std::abs(J(0, 1) + J(1, 0)) < 1e-15);
}

TEST_CASE("Jacobian agrees with finite differences on random draws") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
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
    c.input_norm = u(rng) < 0.5 ? InputNorm::unit : InputNorm::half_power;
    const Complex a{8.0 * u(rng) - 4.0, 8.0 * u(rng) - 4.0};
    const Eigen::Matrix2d J = jacobian(c, a);
    const Eigen::Matrix2d F = finite_difference(c, a);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(J(i, j) - F(i, j)) <= 1e-6 * std::max(1.0, std::abs(J(i, j))));
      }
    }
  }
}

TEST_CASE("kappa = 0 closed form") {
  const Complex a_in{3.0, -1.0}, a0{0.5, 2.0};
  const double R = 0.6, phi = 1.1;
  const MapConfig c = ikeda_limit_map(R, phi, 0.0, a_in);
  const Trajectory t = iterate(c, a0, 50);
  const Complex z = R * std::exp(Complex(0.0, phi));
  const Complex in = a_in / std::sqrt(2.0);
  for (int j = 0; j <= 50; ++j) {
    const Complex zj = std::pow(z, j);
    const Complex expected = in * (1.0 - zj) / (1.0 - z) + zj * a0;
    CHECK(std::abs(t.points[j].a - expected) < 1e-10);
    CHECK(t.points[j].j == j);
  }
}

TEST_CASE("iterate bookkeeping and determinism") {
  const MapConfig c = MapConfig::chaotic();
  const Trajectory one = iterate(c, {0.2, 0.1}, 1);
  REQUIRE(one.points.size() == 2);
  CHECK(one.points[0].a == Complex(0.2, 0.1));
  CHECK(one.points[1].a == step(c, {0.2, 0.1}));
  const Trajectory t1 = iterate(c, 0.0, 5000), t2 = iterate(c, 0.0, 5000);
  for (std::size_t k = 0; k < t1.points.size(); ++k) CHECK(t1.points[k].a == t2.points[k].a);
  CHECK(lyapunov(c, 0.0, 5000) == lyapunov(c, 0.0, 5000));
}

TEST_CASE("non-finite iterates stop with a partial trajectory") {
  MapConfig c = ikeda_limit_map(0.5, 0.0, 0.0, {1e308, 0.0});
  c.input_norm = InputNorm::unit;
  try {
    iterate(c, {1e308, 0.0}, 10);
    FAIL("expected DivergedIterate");
  } catch (const DivergedIterate& e) {
    CHECK(!e.partial().points.empty());
    CHECK(e.partial().points.size() < 11);
  }
  CHECK_THROWS_AS(iterate(c, {1e308, 0.0}, 10), NonFinite);
}

TEST_CASE("configuration validation") {
  MapConfig c = ikeda_limit_map(0.8, 0.0, 0.1, 5.0);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.feedback_R = 0.1;
  c.kappa = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(iterate(MapConfig::chaotic(), 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov(MapConfig::chaotic(), 0.0, 1500, 1000), std::invalid_argument);
}

TEST_CASE("chaotic single block") {
  const MapConfig c = MapConfig::chaotic();
  const double lambda = lyapunov(c, 0.0, 20000, 1000);
  const double oracle = divergence_rate(c, 0.0, 20000, 1000);
  CHECK(lambda > 0.05);
  CHECK(std::abs(lambda - oracle) < 0.2 * oracle);
  CHECK(iterate(c, 0.0, 20000).max_abs() < 20.0);
}

TEST_CASE("stabilized composite reaches a stable fixed point") {
  const MapConfig c = MapConfig::stabilized();
  const FixedPointResult fp = fixed_point(c, c.effective_input());
  CHECK(fp.residual < 1e-10);
  CHECK(fp.stable);
  CHECK(std::abs(fp.point) >= 5.0 / 1.1);
  CHECK(std::abs(fp.point) <= 5.0 / 0.9);
  const Trajectory t = iterate(c, 0.0, 100);
  for (int j = 50; j <= 100; ++j) CHECK(std::abs(t.points[j].a - fp.point) < 1e-6);
  CHECK(std::abs(t.points.back().a - fp.point) < 1e-8);

  const double lambda = lyapunov(c, 0.0, 20000, 1000);
  const double lead = std::max(std::abs(fp.jacobian_eigenvalues.first),
                               std::abs(fp.jacobian_eigenvalues.second));
  CHECK(lambda < 0.0);
  CHECK(std::abs(lambda - std::log(lead)) < 1e-3);

  // Contraction bound |a_in| / |1 - R e^{i phi*}| for the linearized orbit.
  const double R = c.effective_R();
  CHECK(std::abs(fp.point) >= std::abs(c.effective_input()) / (1.0 + R));
  CHECK(std::abs(fp.point) <= std::abs(c.effective_input()) / (1.0 - R));
}

TEST_CASE("Newton failure reports the best residual") {
  MapConfig c = MapConfig::stabilized();
  c.delta = std::asin(0.6 * std::sqrt(2.0));
  try {
    fixed_point(c, c.effective_input());
  } catch (const NoConvergence& e) {
    CHECK(e.best_residual() > 0.0);
  }
}

TEST_CASE("scan rows") {
  const MapConfig c = MapConfig::stabilized();
  ScanOptions o;
  o.iterations = 3000;
  const auto single = scan(c, ScanParameter::R, 0.0, 0.0, 5, o);
  REQUIRE(single.size() == 1);
  CHECK(single[0].value == 0.0);
  CHECK(single[0].lambda == lyapunov(with_parameter(c, ScanParameter::R, 0.0), 0.0, 3000, 1000));

  const auto by_R = scan(c, ScanParameter::R, 0.05, 0.3, 6, o);
  for (const auto& row : by_R) {
    const double delta = std::asin(std::sqrt(2.0) * row.value);
    const auto by_delta = scan(c, ScanParameter::delta, delta, delta, 1, o);
    CHECK(std::abs(by_delta[0].lambda - row.lambda) < 1e-9);
  }
  o.workers = 4;
  const auto parallel = scan(c, ScanParameter::R, 0.05, 0.3, 6, o);
  for (std::size_t k = 0; k < parallel.size(); ++k) {
    CHECK(parallel[k].value == by_R[k].value);
    CHECK(parallel[k].lambda == by_R[k].lambda);
  }
  CHECK_THROWS_AS(scan(c, ScanParameter::R, 0.1, 0.2, 1, o), std::invalid_argument);
}

}  // TEST_SUITE
