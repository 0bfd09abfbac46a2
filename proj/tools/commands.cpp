#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "ikeda/classical.hpp"
#include "ikeda/control.hpp"
#include "ikeda/errors.hpp"
#include "ikeda/fock.hpp"
#include "ikeda/io.hpp"
#include "ikeda/optics.hpp"
#include "ikeda/version.hpp"

namespace fs = std::filesystem;

namespace ikeda::cli {

namespace {

constexpr double kPi = std::numbers::pi;

// Options that never influence output bytes; kept out of CSV headers.
bool is_plumbing(const std::string& name) {
  return name == "out" || name == "manifest" || name == "workers";
}

Complex parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return {io::parse_double(text), 0.0};
  return {io::parse_double(text.substr(0, comma)), io::parse_double(text.substr(comma + 1))};
}

std::string format_complex(Complex z) {
  return io::format_double(z.real()) + "," + io::format_double(z.imag());
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item));
  if (out.empty()) throw std::invalid_argument("empty list '" + text + "'");
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("IKEDA_WORKERS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw std::invalid_argument("IKEDA_WORKERS must be an integer");
    }
  }
  return 1;
}

// Options given explicitly (command line or config file). Defaults are left
// out so presets still apply on replay; resolved values go to the header.
io::KeyValues given_options(const CLI::App& sub) {
  io::KeyValues kv;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->count() == 0) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    kv.emplace_back(name, opt->results().back());
  }
  return kv;
}

std::vector<std::string> header_lines(const std::string& command, const io::KeyValues& params,
                                      const io::KeyValues& extra = {}) {
  std::vector<std::string> h{std::string("ikeda ") + kVersion + " " + command};
  for (const auto& [k, v] : params) {
    if (!is_plumbing(k)) h.push_back(k + " = " + v);
  }
  for (const auto& [k, v] : extra) h.push_back(k + " = " + v);
  return h;
}

class Run {
 public:
  Run(std::string command, const CLI::App& sub, const std::string& out)
      : command_(std::move(command)),
        params_(given_options(sub)),
        start_(std::chrono::steady_clock::now()) {
    const bool has_out = std::any_of(params_.begin(), params_.end(),
                                     [](const auto& kv) { return kv.first == "out"; });
    if (!has_out) params_.emplace_back("out", out);
  }

  const io::KeyValues& params() const { return params_; }

  void write(const fs::path& path, const io::CsvTable& table) {
    io::write_csv(path, table);
    outputs_.push_back(path);
  }

  void finish(const std::string& manifest, std::optional<std::uint64_t> seed) const {
    if (manifest == "none") return;
    io::RunManifest m;
    m.command = command_;
    m.params = params_;
    m.seed = seed;
    m.version = kVersion;
    for (const auto& p : outputs_) m.outputs.emplace_back(p.string(), io::hash_file(p));
    m.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_manifest(manifest, m);
  }

 private:
  std::string command_;
  io::KeyValues params_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> outputs_;
};

std::string default_manifest(const std::string& manifest, const std::string& out) {
  return manifest == "auto" ? out + ".manifest" : manifest;
}

// Map options shared by classical-run, classical-scan, fixed-point and
// lyapunov.
struct MapOptions {
  std::string preset = "none";
  std::string variant = "single_block";
  std::string a_in = "5";
  std::string input_norm = "half_power";
  double phi = 0.0;
  double kappa = 0.1;
  double R = 0.1;
  double delta = 0.0;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* sub) {
    opts["preset"] = sub->add_option("--preset", preset,
                                     "Start from a named parameter set (none, chaotic, stabilized)")
                         ->check(CLI::IsMember({"none", "chaotic", "stabilized"}))
                         ->capture_default_str();
    opts["variant"] = sub->add_option("--variant", variant, "single_block, ikeda_limit or composite")
                          ->check(CLI::IsMember({"single_block", "ikeda_limit", "composite"}))
                          ->capture_default_str();
    opts["a-in"] = sub->add_option("--a-in", a_in, "Fixed input amplitude (re or re,im)")
                       ->capture_default_str();
    opts["input-norm"] = sub->add_option("--input-norm", input_norm, "half_power or unit")
                             ->check(CLI::IsMember({"half_power", "unit"}))
                             ->capture_default_str();
    opts["phi"] = sub->add_option("--phi", phi, "Linear phase (composite: phi_I)")
                      ->capture_default_str();
    opts["kappa"] = sub->add_option("--kappa", kappa, "Kerr coefficient (composite: kappa_I + kappa_II)")
                        ->capture_default_str();
    opts["R"] = sub->add_option("--R", R, "Feedback factor (ikeda_limit, composite)")
                    ->capture_default_str();
    opts["delta"] = sub->add_option("--delta", delta, "Stabilizer offset delta (composite)");
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  MapConfig build() const {
    MapConfig cfg;
    if (preset == "chaotic") {
      cfg = MapConfig::chaotic();
    } else if (preset == "stabilized") {
      cfg = MapConfig::stabilized();
    } else {
      cfg.variant = parse_map_variant(variant);
      cfg.a_in = parse_complex(a_in);
      cfg.phi = phi;
      cfg.kappa = kappa;
      cfg.input_norm = parse_input_norm(input_norm);
      cfg.feedback_R = R;
      cfg.delta = std::asin(std::min(1.0, std::sqrt(2.0) * R));
    }
    if (given("variant")) cfg.variant = parse_map_variant(variant);
    if (given("a-in")) cfg.a_in = parse_complex(a_in);
    if (given("phi")) cfg.phi = phi;
    if (given("kappa")) cfg.kappa = kappa;
    if (given("input-norm")) cfg.input_norm = parse_input_norm(input_norm);
    if (given("R")) {
      if (R < 0.0 || R > 1.0 / std::sqrt(2.0)) {
        throw std::invalid_argument("--R must lie in [0, 1/sqrt2]");
      }
      cfg.feedback_R = R;
      cfg.delta = std::asin(std::sqrt(2.0) * R);
    }
    if (given("delta")) {
      cfg.delta = delta;
      cfg.feedback_R = std::sin(delta) / std::sqrt(2.0);
    }
    cfg.validate();
    return cfg;
  }
};

io::KeyValues describe(const MapConfig& c) {
  io::KeyValues kv{{"resolved.variant", to_string(c.variant)},
                   {"resolved.a_in", format_complex(c.a_in)},
                   {"resolved.phi", io::format_double(c.phi)},
                   {"resolved.kappa", io::format_double(c.kappa)},
                   {"resolved.input_norm", to_string(c.input_norm)}};
  if (c.variant == MapVariant::ikeda_limit) {
    kv.emplace_back("resolved.R", io::format_double(c.feedback_R));
  } else if (c.variant == MapVariant::composite) {
    kv.emplace_back("resolved.delta", io::format_double(c.delta));
    kv.emplace_back("resolved.R", io::format_double(c.effective_R()));
  }
  return kv;
}

// Quantum-loop options shared by quantum-run, verify-cat and qfunc.
struct PairOptions {
  double phi_I = 0.4;
  double R = 0.1;
  double kappa_I = kPi / 4.0;

  void add(CLI::App* sub) {
    sub->add_option("--phi-I", phi_I, "Block I linear phase")->capture_default_str();
    sub->add_option("--R", R, "Feedback factor sin(delta)/sqrt2")->capture_default_str();
    sub->add_option("--kappa-I", kappa_I, "Kerr coefficient per block")->capture_default_str();
  }

  StabilizedPair build() const {
    if (!(R > 0.0 && R < 1.0 / std::sqrt(2.0))) {
      throw std::invalid_argument("--R must lie in (0, 1/sqrt2)");
    }
    if (kappa_I < 0.0) throw std::invalid_argument("--kappa-I must be >= 0");
    return stabilization_offsets({phi_I, kappa_I, Orientation::I},
                                 std::asin(std::sqrt(2.0) * R));
  }
};

struct Cli {
  CLI::App& app;
  std::map<CLI::App*, std::function<int()>> actions;

  explicit Cli(CLI::App& a) : app(a) {
    add_classical_run();
    add_classical_scan();
    add_fixed_point();
    add_lyapunov();
    add_quantum_run();
    add_verify_cat();
    add_qfunc();
    add_check();
  }

  int dispatch() {
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) return action();
    }
    std::cerr << app.help();
    return 2;
  }

  void add_classical_run() {
    auto* sub = app.add_subcommand("classical-run", "Iterate a classical map and write its trajectory");
    auto map = std::make_shared<MapOptions>();
    auto a0 = std::make_shared<std::string>("0");
    auto n = std::make_shared<std::int64_t>(100000);
    auto out = std::make_shared<std::string>("trajectory.csv");
    auto manifest = std::make_shared<std::string>("auto");
    map->add(sub);
    sub->add_option("--a0", *a0, "Initial iterate (re or re,im)")->capture_default_str();
    sub->add_option("--iterations", *n, "Number of map applications")->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", *out, "Trajectory CSV path")->capture_default_str();
    sub->add_option("--manifest", *manifest, "Manifest path ('auto' = OUT.manifest, 'none' = skip)")
        ->capture_default_str();
    actions[sub] = [=] {
      Run run("classical-run", *sub, *out);
      const MapConfig cfg = map->build();
      std::optional<Trajectory> traj;
      int code = 0;
      try {
        traj = iterate(cfg, parse_complex(*a0), *n);
      } catch (const DivergedIterate& e) {
        std::cerr << "error: " << e.what() << '\n';
        traj = e.partial();
        code = 1;
      }
      run.write(*out, io::trajectory_table(*traj, header_lines("classical-run", run.params(), describe(cfg))));
      run.finish(default_manifest(*manifest, *out), std::nullopt);
      std::cout << "points = " << traj->points.size() << '\n'
                << "max_abs_a = " << io::format_double(traj->max_abs()) << '\n'
                << "final_a = " << format_complex(traj->points.back().a) << '\n'
                << "out = " << *out << '\n';
      return code;
    };
  }

  void add_classical_scan() {
    auto* sub = app.add_subcommand("classical-scan", "Scan one parameter: Lyapunov exponent and fixed point");
    auto map = std::make_shared<MapOptions>();
    auto param = std::make_shared<std::string>("R");
    auto lo = std::make_shared<double>(0.05);
    auto hi = std::make_shared<double>(0.7);
    auto steps = std::make_shared<int>(66);
    auto opts = std::make_shared<ScanOptions>();
    auto a0 = std::make_shared<std::string>("0");
    auto out = std::make_shared<std::string>("scan.csv");
    auto manifest = std::make_shared<std::string>("auto");
    opts->workers = default_workers();
    map->add(sub);
    sub->add_option("--param", *param, "R, delta, kappa, phi or a_in_magnitude")
        ->check(CLI::IsMember({"R", "delta", "kappa", "phi", "a_in_magnitude"}))
        ->capture_default_str();
    sub->add_option("--lo", *lo, "Range start")->capture_default_str();
    sub->add_option("--hi", *hi, "Range end")->capture_default_str();
    sub->add_option("--steps", *steps, "Grid points")->capture_default_str();
    sub->add_option("--iterations", opts->iterations, "Iterations per Lyapunov estimate")
        ->capture_default_str();
    sub->add_option("--burn-in", opts->burn_in, "Discarded transient")->capture_default_str();
    sub->add_option("--a0", *a0, "Initial iterate")->capture_default_str();
    sub->add_option("--workers", opts->workers, "Worker threads (default from IKEDA_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", *out, "Scan CSV path")->capture_default_str();
    sub->add_option("--manifest", *manifest, "Manifest path")->capture_default_str();
    actions[sub] = [=] {
      Run run("classical-scan", *sub, *out);
      const MapConfig cfg = map->build();
      ScanOptions o = *opts;
      o.a0 = parse_complex(*a0);
      const ScanParameter p = parse_scan_parameter(*param);
      const auto rows = scan(cfg, p, *lo, *hi, *steps, o);
      run.write(*out, io::scan_table(p, rows, header_lines("classical-scan", run.params(), describe(cfg))));
      run.finish(default_manifest(*manifest, *out), std::nullopt);
      int sign_changes = 0;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if ((rows[i - 1].lambda > 0.0) != (rows[i].lambda > 0.0)) ++sign_changes;
      }
      std::cout << "rows = " << rows.size() << '\n'
                << "lambda_sign_changes = " << sign_changes << '\n'
                << "out = " << *out << '\n';
      return 0;
    };
  }

  void add_fixed_point() {
    auto* sub = app.add_subcommand("fixed-point", "Newton fixed point and its stability");
    auto map = std::make_shared<MapOptions>();
    auto guess = std::make_shared<std::string>("");
    map->add(sub);
    sub->add_option("--guess", *guess, "Newton start (default: effective input)");
    actions[sub] = [=] {
      const MapConfig cfg = map->build();
      const Complex g = guess->empty() ? cfg.effective_input() : parse_complex(*guess);
      const FixedPointResult fp = fixed_point(cfg, g);
      std::cout << "point = " << format_complex(fp.point) << '\n'
                << "abs = " << io::format_double(std::abs(fp.point)) << '\n'
                << "residual = " << io::format_double(fp.residual) << '\n'
                << "eigenvalue_1 = " << format_complex(fp.jacobian_eigenvalues.first) << '\n'
                << "eigenvalue_2 = " << format_complex(fp.jacobian_eigenvalues.second) << '\n'
                << "stable = " << (fp.stable ? "true" : "false") << '\n'
                << "newton_steps = " << fp.newton_steps << '\n';
      if (cfg.variant != MapVariant::single_block) {
        const double a = std::abs(cfg.effective_input());
        const double R = cfg.effective_R();
        std::cout << "contraction_bound = " << io::format_double(a / (1.0 + R)) << ","
                  << io::format_double(a / (1.0 - R)) << '\n';
      }
      return 0;
    };
  }

  void add_lyapunov() {
    auto* sub = app.add_subcommand("lyapunov", "Largest Lyapunov exponent of a classical map");
    auto map = std::make_shared<MapOptions>();
    auto a0 = std::make_shared<std::string>("0");
    auto n = std::make_shared<std::int64_t>(100000);
    auto burn = std::make_shared<std::int64_t>(1000);
    map->add(sub);
    sub->add_option("--a0", *a0, "Initial iterate")->capture_default_str();
    sub->add_option("--iterations", *n, "Total iterations")->capture_default_str();
    sub->add_option("--burn-in", *burn, "Discarded transient")->capture_default_str();
    actions[sub] = [=] {
      const MapConfig cfg = map->build();
      const double lambda = lyapunov(cfg, parse_complex(*a0), *n, *burn);
      std::cout << "lambda_max = " << io::format_double(lambda) << '\n'
                << "regime = " << (lambda > 0.0 ? "chaotic" : "regular") << '\n';
      return 0;
    };
  }

  void add_quantum_run() {
    auto* sub = app.add_subcommand("quantum-run", "Run the quantum feedback loop");
    auto pair = std::make_shared<PairOptions>();
    auto alpha_in = std::make_shared<std::string>("5");
    auto alpha0 = std::make_shared<std::string>("0");
    auto n_max = std::make_shared<int>(0);
    auto iterations = std::make_shared<int>(30);
    auto mode = std::make_shared<std::string>("conditional");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto runs = std::make_shared<int>(1);
    auto workers = std::make_shared<int>(default_workers());
    auto radius = std::make_shared<double>(0.0);
    auto leak = std::make_shared<double>(tol::kLeak);
    auto simulate = std::make_shared<bool>(true);
    auto out = std::make_shared<std::string>("quantum.csv");
    auto manifest = std::make_shared<std::string>("auto");
    pair->add(sub);
    sub->add_option("--alpha-in", *alpha_in, "Fixed input amplitude")->capture_default_str();
    sub->add_option("--alpha0", *alpha0, "Initial amplitude")->capture_default_str();
    sub->add_option("--n-max", *n_max, "Fock cutoff per mode (0 = auto per step)")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_option("--iterations", *iterations, "Loop iterations")->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--mode", *mode, "conditional or unconditional")
        ->check(CLI::IsMember({"conditional", "unconditional"}))
        ->capture_default_str();
    auto* seed_opt = sub->add_option("--seed", *seed, "RNG seed (required for unconditional)");
    sub->add_option("--runs", *runs, "Independent runs with seeds seed, seed+1, ...")
        ->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--workers", *workers, "Worker threads for --runs")->check(CLI::PositiveNumber);
    auto* radius_opt = sub->add_option("--boundary-radius", *radius, "Chaos boundary radius");
    sub->add_option("--leak-threshold", *leak, "Leak threshold")->capture_default_str();
    sub->add_option("--simulate-state", *simulate,
                    "Run the Fock simulation in unconditional mode")
        ->capture_default_str();
    sub->add_option("--out", *out, "Trajectory CSV path")->capture_default_str();
    sub->add_option("--manifest", *manifest, "Manifest path")->capture_default_str();
    actions[sub] = [=] {
      LoopConfig cfg;
      cfg.pair = pair->build();
      cfg.alpha_in = parse_complex(*alpha_in);
      cfg.alpha0 = parse_complex(*alpha0);
      if (*n_max > 0) cfg.cutoff = FockCutoff(*n_max);
      cfg.iterations = *iterations;
      cfg.mode = parse_loop_mode(*mode);
      cfg.leak_threshold = *leak;
      cfg.simulate_state = *simulate;
      if (radius_opt->count() > 0) cfg.chaos_boundary_radius = *radius;
      if (seed_opt->count() > 0) cfg.seed = *seed;
      if (cfg.mode == LoopMode::unconditional && !cfg.seed) {
        throw CLI::RequiredError("--seed (mandatory with --mode unconditional)");
      }
      if (*runs > 1 && cfg.mode == LoopMode::conditional) {
        throw std::invalid_argument("--runs > 1 needs --mode unconditional");
      }
      Run run("quantum-run", *sub, *out);
      std::vector<QuantumTrajectory> trajs;
      if (*runs == 1) {
        trajs.push_back(run_loop(cfg));
      } else {
        std::vector<std::uint64_t> seeds;
        for (int k = 0; k < *runs; ++k) seeds.push_back(*seed + static_cast<std::uint64_t>(k));
        trajs = run_ensemble(cfg, seeds, *workers);
      }
      int crossed = 0;
      for (std::size_t k = 0; k < trajs.size(); ++k) {
        const auto& t = trajs[k];
        fs::path path = *out;
        if (trajs.size() > 1) {
          path.replace_filename(path.stem().string() + "_run" + std::to_string(k) +
                                path.extension().string());
        }
        io::KeyValues extra{
            {"resolved.phi_I", io::format_double(cfg.pair.block_I.phi)},
            {"resolved.phi_II", io::format_double(cfg.pair.block_II.phi)},
            {"resolved.kappa_I", io::format_double(cfg.pair.block_I.kappa)},
            {"resolved.kappa_II", io::format_double(cfg.pair.block_II.kappa)},
            {"resolved.delta", io::format_double(cfg.pair.delta)},
            {"resolved.R", io::format_double(cfg.pair.feedback_R)},
            {"resolved.alpha_in", format_complex(cfg.alpha_in)},
            {"resolved.alpha0", format_complex(cfg.alpha0)},
            {"resolved.iterations", std::to_string(cfg.iterations)},
            {"resolved.mode", to_string(cfg.mode)},
            {"resolved.n_max", cfg.cutoff ? std::to_string(cfg.cutoff->n_max()) : "auto"},
            {"resolved.leak_threshold", io::format_double(cfg.leak_threshold)},
            {"resolved.simulate_state", cfg.simulate_state ? "true" : "false"},
            {"resolved.boundary_radius", io::format_double(cfg.boundary_radius())},
            {"resolved.Phi", io::format_double(cfg.pair.mean_phase())},
            {"expected_trials", io::format_double(t.expected_trials)}};
        if (t.config.seed) extra.emplace_back("run_seed", std::to_string(*t.config.seed));
        run.write(path, io::trajectory_table(t, header_lines("quantum-run", run.params(), extra)));
        crossed += t.crossed_boundary();
        if (trajs.size() > 1) {
          std::cout << "run " << k << ": max_abs_alpha = " << io::format_double(t.max_abs_alpha())
                    << " crossed = " << (t.crossed_boundary() ? "yes" : "no") << '\n';
        }
      }
      run.finish(default_manifest(*manifest, *out), cfg.seed);
      const auto& t0 = trajs.front();
      std::cout << "final_alpha = " << format_complex(t0.alphas().back()) << '\n'
                << "max_abs_alpha = " << io::format_double(t0.max_abs_alpha()) << '\n'
                << "boundary_radius = " << io::format_double(cfg.boundary_radius()) << '\n'
                << "runs_crossing_boundary = " << crossed << "/" << trajs.size() << '\n'
                << "expected_trials = " << io::format_double(t0.expected_trials) << '\n';
      return 0;
    };
  }

  void add_verify_cat() {
    auto* sub = app.add_subcommand("verify-cat", "Compare the two-block output with the cat state");
    auto pair = std::make_shared<PairOptions>();
    auto alphas = std::make_shared<std::string>("2,3,4");
    auto n_max = std::make_shared<int>(60);
    auto calibrate = std::make_shared<bool>(true);
    pair->add(sub);
    sub->add_option("--alphas", *alphas, "Comma-separated input amplitudes")->capture_default_str();
    sub->add_option("--n-max", *n_max, "Fock cutoff per mode")->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--calibrate", *calibrate, "Also optimise two mode-local phases")
        ->capture_default_str();
    actions[sub] = [=] {
      const StabilizedPair p = pair->build();
      const FockCutoff cut(*n_max);
      const ForwardModel model(p, cut);
      const double Phi = p.mean_phase();
      std::cout << "# Phi = " << io::format_double(Phi)
                << "  unitarity_deviation = " << io::format_double(model.unitarity_deviation()) << '\n';
      std::cout << "alpha,fidelity_to_cat,calibrated_fidelity,chi_r,chi_q,branch_model_fidelity,branches,leak\n";
      for (double a : parse_list(*alphas)) {
        const TwoModeState s = model.forward(a);
        const double f = fidelity_to_cat(s, a, Phi);
        CatCalibration c{f, 0.0, 0.0};
        if (*calibrate) c = calibrate_cat_phases(s, a, Phi);
        const auto branches = output_branches(a, p);
        const TwoModeState b = branch_state(branches, cut);
        const double fb = std::norm(overlap(b, s)) / (b.norm_squared() * s.norm_squared());
        std::cout << io::format_double(a) << ',' << io::format_double(f) << ','
                  << io::format_double(c.fidelity) << ',' << io::format_double(c.chi_r) << ','
                  << io::format_double(c.chi_q) << ',' << io::format_double(fb) << ','
                  << branches.size() << ',' << io::format_double(leak_fraction(s)) << '\n';
      }
      return 0;
    };
  }

  void add_qfunc() {
    auto* sub = app.add_subcommand("qfunc", "Husimi Q function of one mode on a grid");
    auto pair = std::make_shared<PairOptions>();
    auto state = std::make_shared<std::string>("forward");
    auto alpha = std::make_shared<std::string>("4");
    auto mode = std::make_shared<std::string>("r");
    auto n_max = std::make_shared<int>(0);
    auto window = std::make_shared<std::string>("");
    auto resolution = std::make_shared<std::string>("81,81");
    auto out = std::make_shared<std::string>("qfunc.csv");
    auto manifest = std::make_shared<std::string>("auto");
    pair->add(sub);
    sub->add_option("--state", *state, "coherent, cat or forward")
        ->check(CLI::IsMember({"coherent", "cat", "forward"}))
        ->capture_default_str();
    sub->add_option("--alpha", *alpha, "Amplitude of the source state")->capture_default_str();
    sub->add_option("--mode", *mode, "Mode kept after the partial trace (r or q)")
        ->check(CLI::IsMember({"r", "q"}))
        ->capture_default_str();
    sub->add_option("--n-max", *n_max, "Fock cutoff (0 = auto)")->capture_default_str();
    sub->add_option("--window", *window, "re_min,re_max,im_min,im_max (default: centred, |alpha|+3)");
    sub->add_option("--resolution", *resolution, "n_re,n_im")->capture_default_str();
    sub->add_option("--out", *out, "QGrid CSV path")->capture_default_str();
    sub->add_option("--manifest", *manifest, "Manifest path")->capture_default_str();
    actions[sub] = [=] {
      Run run("qfunc", *sub, *out);
      const Complex a = parse_complex(*alpha);
      const FockCutoff cut = *n_max > 0 ? FockCutoff(*n_max) : auto_cutoff(std::abs(a));
      DensityOperator rho;
      if (*state == "coherent") {
        rho = pure_density(make_coherent(a, cut));
      } else {
        const StabilizedPair p = pair->build();
        const TwoModeState s = *state == "cat" ? ideal_cat(a, p.mean_phase(), cut)
                                               : forward_pass(a, p, cut);
        rho = reduce_mode(s, *mode);
      }
      PhaseWindow w;
      if (window->empty()) {
        const double ext = std::abs(a) + 3.0;
        w = {-ext, ext, -ext, ext};
      } else {
        const auto v = parse_list(*window);
        if (v.size() != 4) throw std::invalid_argument("--window needs four numbers");
        w = {v[0], v[1], v[2], v[3]};
      }
      const auto res = parse_list(*resolution);
      if (res.size() != 2) throw std::invalid_argument("--resolution needs two integers");
      const QGrid g = husimi_q(rho, w, static_cast<int>(res[0]), static_cast<int>(res[1]));
      const io::KeyValues extra{{"resolved.state", *state},
                                {"resolved.alpha", format_complex(a)},
                                {"resolved.mode", *state == "coherent" ? "single" : *mode},
                                {"resolved.n_max", std::to_string(cut.n_max())},
                                {"resolved.window", io::format_double(w.re_min) + "," +
                                                        io::format_double(w.re_max) + "," +
                                                        io::format_double(w.im_min) + "," +
                                                        io::format_double(w.im_max)}};
      run.write(*out, io::qgrid_table(g, header_lines("qfunc", run.params(), extra)));
      run.finish(default_manifest(*manifest, *out), std::nullopt);
      std::cout << "grid = " << g.n_re << "x" << g.n_im << '\n'
                << "integral = " << io::format_double(g.integral()) << '\n'
                << "trace = " << io::format_double(rho.trace()) << '\n'
                << "out = " << *out << '\n';
      return 0;
    };
  }

  void add_check() {
    auto* sub = app.add_subcommand("check", "Run the unitarity and invariant self-test battery");
    auto verbose = std::make_shared<bool>(false);
    sub->add_flag("--verbose", *verbose, "Print figures of merit");
    actions[sub] = [=] { return run_check_battery(*verbose) ? 0 : 1; };
  }
};

// Re-runs a manifest's command into a scratch directory and compares hashes.
int replay(const std::string& manifest_path) {
  const io::RunManifest m = io::read_manifest(manifest_path);
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path scratch = fs::temp_directory_path() /
      ("ikeda-replay-" + io::fnv1a64_hex(manifest_path + std::to_string(stamp)));
  fs::create_directories(scratch);
  std::vector<std::string> args{"ikeda", m.command};
  std::string out;
  for (const auto& [k, v] : m.params) {
    if (k == "manifest") continue;
    if (k == "out") {
      out = (scratch / fs::path(v).filename()).string();
      args.push_back("--out=" + out);
      continue;
    }
    args.push_back("--" + k + "=" + v);
  }
  args.push_back("--manifest=none");
  const int code = main_with_args(args);
  if (code != 0) {
    std::cerr << "replay: command exited with " << code << '\n';
    fs::remove_all(scratch);
    return code;
  }
  bool all = true;
  for (const auto& [path, hash] : m.outputs) {
    const fs::path again = scratch / fs::path(path).filename();
    const std::string h = fs::exists(again) ? io::hash_file(again) : "missing";
    const bool same = h == hash;
    all = all && same;
    std::cout << (same ? "MATCH " : "MISMATCH ") << path << ' ' << hash << ' ' << h << '\n';
  }
  fs::remove_all(scratch);
  return all ? 0 : 1;
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return rest;
  io::KeyValues kv;
  try {
    kv = io::read_config_file(*config);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(std::string("--config: ") + e.what());
  }
  // Insert after the subcommand (first token not starting with '-').
  std::size_t at = 1;
  while (at < rest.size() && rest[at].rfind("-", 0) == 0) ++at;
  if (at < rest.size()) ++at;
  std::vector<std::string> file_args;
  for (const auto& [k, v] : kv) file_args.push_back("--" + k + "=" + v);
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(at), file_args.begin(), file_args.end());
  return rest;
}

int main_with_args(std::vector<std::string> args) {
  CLI::App app{"Ikeda-map chaos stabilization: classical maps and quantum feedback", "ikeda"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "Flat key = value file; command-line flags override it");
  Cli cli(app);

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  replay_cmd->add_option("manifest", manifest_path, "Manifest file")->required();

  try {
    args = expand_config(args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (replay_cmd->parsed()) return replay(manifest_path);
    return cli.dispatch();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ikeda::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ikeda::cli
