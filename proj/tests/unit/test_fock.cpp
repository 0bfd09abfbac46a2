#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "ikeda/fock.hpp"
#include "oracles.hpp"

using namespace ikeda;

TEST_SUITE("fock") {

TEST_CASE("vacuum from a zero amplitude") {
  const ModeState s = make_coherent(0.0, FockCutoff(10));
  CHECK(std::abs(s.amps[0] - 1.0) == doctest::Approx(0.0));
  CHECK(s.amps.tail(10).norm() == 0.0);
}

TEST_CASE("coherent mean photon number is |alpha|^2") {
  const ModeState s = make_coherent({2.0, 0.0}, FockCutoff(40));
  CHECK(std::abs(mean_photon_number(s) - 4.0) < 1e-10);
  for (int n = 0; n <= 10; ++n) {
    const double poisson = std::exp(-4.0) * std::pow(4.0, n) / std::tgamma(n + 1.0);
    CHECK(std::norm(s.amps[n]) == doctest::Approx(poisson).epsilon(1e-12));
  }
}

TEST_CASE("Poisson tail against the regularized incomplete gamma") {
  for (double a : {1.0, 3.0, 5.0, 7.5}) {
    for (int n_max : {20, 40, 60}) {
      const double expected = boost::math::gamma_p(n_max + 1.0, a * a);
      const double tail = coherent_tail(a, FockCutoff(n_max));
      if (expected > 1e-280) {
        CHECK(tail == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
  const ModeState s = make_coherent(5.0, FockCutoff(60));
  CHECK(s.tail_population < 1e-8);
  CHECK(std::abs(s.norm_squared() - 1.0) < 1e-10);
}

TEST_CASE("large Fock levels do not overflow") {
  const ModeState s = make_coherent(12.0, FockCutoff(240));
  CHECK(std::isfinite(s.norm_squared()));
  CHECK(std::abs(mean_field(s) - 12.0) < 1e-8);
  CHECK(log_factorial(200) == doctest::Approx(std::lgamma(201.0)).epsilon(1e-13));
}

TEST_CASE("heavy tail is refused unless allowed") {
  CHECK_THROWS_AS(make_coherent(5.0, FockCutoff(20)), TailTooHeavy);
  CHECK_NOTHROW(make_coherent(5.0, FockCutoff(20), TailPolicy::allow));
  CHECK_THROWS_AS(FockCutoff(-1), std::invalid_argument);
}

TEST_CASE("tensor product overlaps factorize") {
  const FockCutoff cut(50);
  const Complex a{1.2, -0.3}, b{-0.5, 0.9}, a2{0.8, 0.1}, b2{-0.2, 1.4};
  const auto s1 = tensor_product(make_coherent(a, cut), make_coherent(b, cut));
  const auto s2 = tensor_product(make_coherent(a2, cut), make_coherent(b2, cut));
  const Complex expected = oracle::coherent_overlap(a, a2) * oracle::coherent_overlap(b, b2);
  CHECK(std::abs(overlap(s1, s2) - expected) < 1e-10);
  CHECK(overlap(s1, s2) == std::conj(overlap(s2, s1)));
  CHECK(overlap(s1, s1).imag() == 0.0);
  CHECK(std::abs(overlap(s1, s1).real() - s1.norm_squared()) < 1e-14);

  const auto v = tensor_product(vacuum(cut), vacuum(cut));
  CHECK(v.amps(0, 0) == Complex(1.0));
  const auto f = tensor_product(fock_state(1, cut), vacuum(cut));
  CHECK(overlap(v, f) == Complex(0.0));

  CHECK_THROWS_AS(tensor_product(vacuum(cut), vacuum(FockCutoff(10))), CutoffMismatch);
}

TEST_CASE("partial trace") {
  const FockCutoff cut(40);
  const Complex a{1.5, 0.5};
  const auto prod = tensor_product(make_coherent(a, cut), make_coherent({0.0, -1.0}, cut));
  const DensityOperator rho = reduce_mode(prod, "a");
  CHECK(std::abs(rho.purity() - 1.0) < 1e-10);
  CHECK(std::abs(rho.trace() - prod.norm_squared()) < 1e-12);
  CHECK(rho.is_hermitian());
  CHECK(std::abs(mean_field(prod, "a") - a) < 1e-10);

  // (|a>|0> + |-a>|1>)/sqrt2: orthogonal partners leave a two-component mixture.
  TwoModeState ent = tensor_product(make_coherent(a, cut), fock_state(0, cut));
  ent.amps += tensor_product(make_coherent(-a, cut), fock_state(1, cut)).amps;
  ent.amps /= std::sqrt(2.0);
  const DensityOperator mix = reduce_mode(ent, "a");
  const double expected = 0.5 * (1.0 + std::norm(oracle::coherent_overlap(a, -a)));
  CHECK(std::abs(mix.purity() - expected) < 1e-10);
  CHECK(mix.min_eigenvalue() > -1e-10);
  CHECK_THROWS_AS(reduce_mode(ent, "z"), UnknownMode);
  CHECK_THROWS_AS(mean_field(ent, "q"), UnknownMode);

  // Sub-normalized input keeps its squared norm as the trace.
  TwoModeState half = prod;
  half.amps *= 0.5;
  CHECK(std::abs(reduce_mode(half, "b").trace() - 0.25) < 1e-12);
}

TEST_CASE("even cat has zero mean field") {
  const FockCutoff cut(50);
  ModeState cat = make_coherent(2.5, cut);
  cat.amps += make_coherent(-2.5, cut).amps;
  cat = cat.normalized();
  CHECK(std::abs(mean_field(cat)) < 1e-10);
  CHECK(std::abs(mean_field(vacuum(cut))) == 0.0);
}

TEST_CASE("Husimi Q function") {
  const FockCutoff cut(30);
  const QGrid vac = husimi_q(pure_density(vacuum(cut)), {-2, 2, -2, 2}, 41, 41);
  CHECK(vac.values.maxCoeff() == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
  Eigen::Index i, j;
  vac.values.maxCoeff(&i, &j);
  CHECK(std::abs(vac.point(static_cast<int>(i), static_cast<int>(j))) < 1e-12);

  const Complex a{1.3, -0.7};
  const QGrid coh = husimi_q(pure_density(make_coherent(a, cut)), {-4, 4, -4, 4}, 81, 81);
  coh.values.maxCoeff(&i, &j);
  CHECK(std::abs(coh.point(static_cast<int>(i), static_cast<int>(j)) - a) < 0.071);
  CHECK(coh.values.minCoeff() >= 0.0);
  // Analytic Q of a coherent state: exp(-|beta - a|^2)/pi.
  for (int k = 0; k < 81; k += 7) {
    const Complex beta = coh.point(k, 80 - k);
    CHECK(std::abs(coh.values(k, 80 - k) - std::exp(-std::norm(beta - a)) / std::numbers::pi) < 1e-12);
  }
  CHECK(coh.integral() <= 1.0 + 1e-3);
  CHECK(coh.integral() == doctest::Approx(1.0).epsilon(1e-3));

  CHECK_THROWS_AS(husimi_q(pure_density(vacuum(cut)), {1, 1, -1, 1}, 10, 10), DegenerateWindow);
  CHECK_THROWS_AS(husimi_q(pure_density(vacuum(cut)), {-1, 1, -1, 1}, 1, 10), std::invalid_argument);
}

TEST_CASE("leak fraction flags under-truncation") {
  CHECK(leak_fraction(tensor_product(vacuum(FockCutoff(10)), vacuum(FockCutoff(10)))) == 0.0);
  CHECK(leak_fraction(make_coherent(5.0, FockCutoff(60))) < 1e-8);
  CHECK(leak_fraction(make_coherent(5.0, FockCutoff(30), TailPolicy::allow)) > 1e-3);
  const auto s = tensor_product(vacuum(FockCutoff(30)), make_coherent(5.0, FockCutoff(30), TailPolicy::allow));
  CHECK(leak_fraction(s) > 1e-3);
}

}  // TEST_SUITE
