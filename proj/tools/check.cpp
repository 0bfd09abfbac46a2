#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "commands.hpp"
#include "ikeda/classical.hpp"
#include "ikeda/control.hpp"
#include "ikeda/fock.hpp"
#include "ikeda/optics.hpp"

namespace ikeda::cli {

namespace {

struct Check {
  std::string name;
  std::function<double()> measure;  // figure of merit
  double limit;                     // pass when measure <= limit
};

}  // namespace

bool run_check_battery(bool verbose) {
  constexpr double pi = std::numbers::pi;
  const FockCutoff cut(20);
  const StabilizedPair pair = LoopConfig::preset().pair;

  const std::vector<Check> checks{
      {"splitter unitarity", [&] { return arm_splitter(cut).unitarity_deviation(); },
       tol::kUnitarity},
      {"block I unitarity",
       [&] { return BlockUnitary({0.4, pi / 4, Orientation::I}, cut).unitarity_deviation(); },
       tol::kUnitarity},
      {"block II unitarity",
       [&] { return BlockUnitary({0.4, pi / 4, Orientation::II}, cut).unitarity_deviation(); },
       tol::kUnitarity},
      {"block generator", [&] { return block_generator_check(pair.block_I, FockCutoff(12)); },
       1e-9},
      {"coherent normalisation",
       [&] { return std::abs(make_coherent({1.5, -0.5}, cut).norm_squared() - 1.0); },
       tol::kNorm},
      {"stabilizer phase offset",
       [&] {
         return std::abs(std::remainder(pair.block_II.phi - pair.block_I.phi + pi - 2.0 * pair.delta,
                                        2.0 * pi));
       },
       1e-12},
      {"revival at kappa = pi/4",
       [&] {
         const RevivalInfo r = revival_check(pi / 4, 1e-12);
         return r.is_revival && r.l == 4 ? 0.0 : 1.0;
       },
       0.0},
      {"kitten weights",
       [&] {
         double sum = 0.0;
         for (const auto& k : kitten_decomposition(pi / 4, 0.4)) sum += std::norm(k.weight);
         return std::abs(sum - 1.0);
       },
       1e-12},
      {"forward pass norm",
       [&] { return std::abs(forward_pass(2.0, pair, FockCutoff(40)).norm_squared() - 1.0); },
       1e-9},
      {"c-number r output vs composite map",
       [&] {
         MapConfig m;
         m.variant = MapVariant::composite;
         m.a_in = 0.0;
         m.phi = pair.block_I.phi;
         m.kappa = pair.total_kappa();
         m.delta = pair.delta;
         m.input_norm = InputNorm::unit;
         const Complex a{1.3, 0.4};
         return std::abs(classical_r(a, pair) - std::sqrt(2.0) * step(m, a));
       },
       1e-12},
      {"Husimi integral of a coherent state",
       [&] {
         const QGrid g = husimi_q(pure_density(make_coherent(1.0, cut)), {-5, 5, -5, 5}, 101, 101);
         return std::abs(g.integral() - 1.0);
       },
       1e-3},
  };

  bool all = true;
  for (const auto& c : checks) {
    double v;
    try {
      v = c.measure();
    } catch (const std::exception& e) {
      std::printf("FAIL %s (%s)\n", c.name.c_str(), e.what());
      all = false;
      continue;
    }
    const bool ok = std::isfinite(v) && v <= c.limit;
    all = all && ok;
    if (verbose) {
      std::printf("%s %s: %.3g (limit %.3g)\n", ok ? "PASS" : "FAIL", c.name.c_str(), v, c.limit);
    } else {
      std::printf("%s %s\n", ok ? "PASS" : "FAIL", c.name.c_str());
    }
  }
  return all;
}

}  // namespace ikeda::cli
