#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coulomb/brute_force.hpp"
#include "coulomb/determinantal.hpp"
#include "coulomb/deviations.hpp"
#include "coulomb/energies.hpp"
#include "coulomb/envelope.hpp"
#include "coulomb/sampling.hpp"
#include "coulomb/serialize.hpp"

namespace fs = std::filesystem;
using namespace coulomb;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0, kExitError = 1, kExitFailed = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json defaults() {
  return Json{{"command", ""},
              {"potential", "fs"},
              {"lambda", 1.0},
              {"amplitude", 0.3},
              {"charges", Json::array()},
              {"potential_file", ""},
              {"n", 16},
              {"beta", 1.0},
              {"convention", "exterior_NplusP"},
              {"seed", 1},
              {"grid", {{"R", 0.0}, {"h", 1.0 / 64}}},
              {"output_dir", "coulomb-lab-out"},
              {"method", "auto"},
              {"ensemble", "spherical"},
              {"reps", 500},
              {"u", "zonal"},
              {"bump", {{"center", {0.0, 0.0}}, {"inner", 0.3}, {"outer", 0.6}, {"height", 1.0}}},
              {"t", {-1.0, -0.5, 0.5, 1.0}},
              {"s", 2.5},
              {"z0", {0.0, 0.0}},
              {"scale", 0.0},
              {"delta", 0.2},
              {"speed", 0.0},
              {"format", "csv"},
              {"steps", 20000},
              {"burn_in", 2000},
              {"thin", 10},
              {"sigma", 0.3},
              {"chains", 1},
              {"tolerance", 0.15}};
}

// ---- builders ---------------------------------------------------------------

Potential make_potential(const Json& cfg) {
  const std::string name = cfg["potential"];
  if (name == "fs") return fs_potential_fn();
  if (name == "quad") return quadratic(cfg["lambda"].get<double>());
  if (name == "fs_bump")
    return plus(fs_potential_fn(), radial_bump({0.0, 0.0}, 0.5, 0.8, cfg["amplitude"].get<double>()));
  if (name == "quad_charge") {
    std::vector<Charge> charges;
    if (cfg["charges"].is_string())
      charges = load_charges_json(cfg["charges"].get<std::string>());
    else
      charges = parse_charges_json(cfg["charges"].dump());
    return quasi_hole(quadratic(cfg["lambda"].get<double>()), charges);
  }
  if (name == "file") {
    const std::string path = cfg["potential_file"];
    if (path.empty() || !fs::exists(path)) throw ConfigError("potential file not found: " + path);
    return load_potential_csv(path);
  }
  throw ConfigError("unknown potential: " + name);
}

TestFunction make_u(const Json& cfg) {
  const std::string name = cfg["u"];
  if (name == "zonal") return zonal_function();
  if (name == "real") return real_part();
  if (name == "bump") {
    const Json& b = cfg["bump"];
    return radial_bump({b["center"][0].get<double>(), b["center"][1].get<double>()}, b["inner"].get<double>(),
                       b["outer"].get<double>(), b["height"].get<double>());
  }
  if (name.rfind("constant", 0) == 0) return constant_function(0.0);
  throw ConfigError("unknown test function: " + name);
}

EnvelopeOptions envelope_options(const Json& cfg) {
  EnvelopeOptions opt;
  opt.h = cfg["grid"]["h"].get<double>();
  opt.radius = cfg["grid"]["R"].get<double>();
  return opt;
}

Measure equilibrium_measure(const Potential& phi, const Json& cfg) {
  if (phi.radial()) return radial_measure("mu_phi", radial_envelope(phi).measure);
  return project_envelope(phi, envelope_options(cfg)).measure();
}

// ensemble -> (phi in the V = (N+1) phi form, equilibrium measure of phi)
struct EnsembleModel {
  Potential phi;
  Measure mu;
  Convention convention;
};

EnsembleModel ensemble_model(Ensemble e, int n) {
  if (e == Ensemble::spherical) return {fs_potential_fn(), mu0_measure(), Convention::adjoint_Nplus1};
  // V = N |z|^2 = (N + 1) phi_N
  Potential phi = rescale_phi_N(quadratic(1.0), n, 1.0);
  return {phi, uniform_disk(1.0), Convention::adjoint_Nplus1};
}

SampleSet draw(const Json& cfg, const Potential* phi_for_mcmc) {
  const std::string ens = cfg["ensemble"];
  const int n = cfg["n"];
  const std::uint64_t seed = cfg["seed"];
  if (ens == "mcmc") {
    SamplerConfig sc;
    sc.n = n;
    sc.beta = cfg["beta"];
    sc.potential_convention = parse_convention(cfg["convention"]);
    sc.steps = cfg["steps"];
    sc.burn_in = cfg["burn_in"];
    sc.thin = cfg["thin"];
    sc.proposal_sigma = cfg["sigma"];
    sc.seed = seed;
    sc.chains = cfg["chains"];
    return mcmc_run(sc, *phi_for_mcmc);
  }
  return exact_samples(parse_ensemble(ens), n, cfg["reps"], seed);
}

PartitionValue partition_for(const Potential& phi, int n, double beta, Convention conv, const std::string& method,
                             const Json& cfg) {
  std::string m = method;
  if (m == "auto") m = beta == 1.0 ? "gram" : (n <= 3 ? "brute" : "thermo");
  if (m == "gram") {
    if (beta != 1.0) throw ConfigError("the gram method needs beta = 1");
    return log_partition_beta1(phi, n, conv);
  }
  if (m == "brute") return brute_force_log_z(phi, n, beta, conv);
  if (m == "thermo") {
    if (conv != Convention::exterior_NplusP) throw ConfigError("thermo integration uses the exterior_NplusP convention");
    SamplerConfig sc;
    sc.steps = cfg["steps"];
    sc.burn_in = cfg["burn_in"];
    sc.thin = cfg["thin"];
    sc.proposal_sigma = cfg["sigma"];
    sc.seed = cfg["seed"];
    sc.chains = cfg["chains"];
    return thermo_log_z(phi, n, beta, sc);
  }
  throw ConfigError("unknown method: " + method);
}

// ---- validation ---------------------------------------------------------------

Json validate(const Json& cfg) {
  Json diags = Json::array();
  auto add = [&](const char* level, const std::string& msg) { diags.push_back({{"level", level}, {"message", msg}}); };
  const double beta = cfg["beta"];
  if (beta > 2.0)
    add("error", "beta > 2 is rejected: the sub-Gaussian bounds fail drastically in this range");
  else if (beta > 1.0)
    add("error", "beta in (1, 2] is an untested region; supported range is (0, 1]");
  else if (!(beta > 0.0))
    add("error", "beta must be positive");
  if (cfg["n"].get<int>() < 1) add("error", "n must be at least 1");
  const double h = cfg["grid"]["h"];
  if (!(h > 0.0)) add("error", "grid.h must be positive");
  try {
    const Potential phi = make_potential(cfg);
    const Convention conv = parse_convention(cfg["convention"]);
    if (phi.growth() == GrowthClass::Inadmissible)
      add("error", "potential does not have admissible growth");
    else if (conv == Convention::exterior_Nphi && phi.growth() != GrowthClass::StrictlySuperLog)
      add("error", "V = N phi with only logarithmic growth: the partition function is infinite");
    const double R = cfg["grid"]["R"];
    if (R > 0.0 && phi.growth() != GrowthClass::Inadmissible) {
      const double bound = outer_radius_bound(phi);
      if (std::isfinite(bound) && R < bound)
        add("error", "grid.R = " + format_double(R) + " is below the outer-radius bound " + format_double(bound));
    }
  } catch (const std::exception& e) {
    add("error", e.what());
  }
  return diags;
}

bool has_errors(const Json& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Json& d) { return d["level"] == "error"; });
}

// ---- commands -------------------------------------------------------------------

struct Run {
  Json cfg;
  fs::path out;
  std::vector<std::string> artifacts;
  bool passed = true;
};

Json cmd_eq_solve(Run& run) {
  const Potential phi = make_potential(run.cfg);
  EquilibriumResult res = project_envelope(phi, envelope_options(run.cfg));
  if (std::isnan(res.free_energy)) res.free_energy = free_energy(phi, envelope_options(run.cfg));
  for (auto& f : write_equilibrium((run.out / "equilibrium").string(), res)) run.artifacts.push_back(f);
  return equilibrium_report(res);
}

Json cmd_logz(Run& run) {
  const Json& c = run.cfg;
  const PartitionValue v = partition_for(make_potential(c), c["n"], c["beta"], parse_convention(c["convention"]),
                                         c["method"], c);
  return to_json(v);
}

Json cmd_error_seq(Run& run) {
  const Json& c = run.cfg;
  const Potential phi = make_potential(c);
  const int n = c["n"];
  const double beta = c["beta"];
  const double F = free_energy(phi, envelope_options(c));
  const PartitionValue z = partition_for(phi, n, beta, Convention::exterior_NplusP, c["method"], c);
  const ErrorSequenceReport r = error_sequence(phi, n, beta, z, F);
  Json j{{"report", to_json(r)}, {"free_energy", F}, {"partition", to_json(z)}};
  if (beta == 1.0) {
    const ErrorBound b = error_bound(phi);
    const bool ok = r.total >= -1e-9 && r.total <= b.bound(n);
    j["bound"] = to_json(b);
    j["bound_value"] = b.bound(n);
    j["within_bound"] = ok;
    run.passed = ok;
  }
  return j;
}

Json cmd_sample(Run& run) {
  const Json& c = run.cfg;
  const Potential phi = make_potential(c);
  const SampleSet s = draw(c, &phi);
  const fs::path dir = run.out / "configs";
  fs::create_directories(dir);
  const bool binary = c["format"] == "cgcf";
  double mean_abs_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < s.configs.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "config_%05zu.%s", k, binary ? "cgcf" : "csv");
    const std::string path = (dir / name).string();
    if (binary)
      write_cgcf(path, s.configs[k]);
    else
      write_configuration_csv(path, s.configs[k]);
    run.artifacts.push_back(path);
    for (const auto& z : s.configs[k].points) {
      mean_abs_sq += std::norm(z);
      ++count;
    }
  }
  return Json{{"ensemble", c["ensemble"]},
              {"n", c["n"]},
              {"configs", s.configs.size()},
              {"acceptance_rate", s.acceptance_rate},
              {"autocorr_time_estimate", s.autocorr_time_estimate},
              {"seed", s.seed},
              {"mean_abs_sq", count ? mean_abs_sq / static_cast<double>(count) : 0.0}};
}

Json cmd_verify_subgaussian(Run& run) {
  const Json& c = run.cfg;
  const int n = c["n"];
  const std::string ens = c["ensemble"];
  const TestFunction u = make_u(c);
  Potential phi = make_potential(c);
  double beta = c["beta"];
  Measure mu = mu0_measure();
  Convention conv = Convention::exterior_NplusP;
  if (ens == "mcmc") {
    conv = parse_convention(c["convention"]);
    mu = equilibrium_measure(phi, c);
  } else {
    const EnsembleModel m = ensemble_model(parse_ensemble(ens), n);
    phi = m.phi;
    mu = m.mu;
    conv = m.convention;
    beta = 1.0;
  }
  const double p = p_of_beta(beta);
  const double speed = c["speed"].get<double>() > 0.0 ? c["speed"].get<double>() : n * (n + p) * beta;
  const double u_bar = equilibrium_mean(u, mu);
  double eps = 0.0;
  if (ens == "spherical") {
    eps = error_sequence(phi, n, 1.0, log_partition_beta1(phi, n), 0.5).total;
  } else {
    const double F = free_energy(phi, envelope_options(c));
    eps = error_sequence(phi, n, beta, partition_for(phi, n, beta, Convention::exterior_NplusP, "auto", c), F).total;
  }
  const SampleSet s = draw(c, &phi);
  const std::vector<double> t_grid = c["t"].get<std::vector<double>>();
  const MGFReport rep = empirical_log_mgf(s, u, u_bar, t_grid, speed, 400, c["seed"].get<std::uint64_t>());
  const double h1 = h1_norm_sq(u);
  const auto verdicts = verify_subgaussian(rep, h1, eps);
  // int psi0 d mu_{phi+u} must be finite; inconclusive cases are reported, not gated
  const Psi0Moment moment = psi0_moment(equilibrium_measure(plus(phi, u), c));
  Json jv = Json::array();
  for (const auto& v : verdicts) {
    jv.push_back(to_json(v));
    if (moment.finite) run.passed = run.passed && v.passed;
  }
  Json j{{"ensemble", ens},     {"n", n},         {"beta", beta},   {"speed", speed},
         {"u_bar", u_bar},      {"h1_norm_sq", h1}, {"epsilon", eps}, {"mgf", to_json(rep)},
         {"verdicts", jv}};
  j["integrability"] = {{"psi0_moment", moment.finite ? Json(moment.value) : Json(nullptr)},
                        {"finite", moment.finite},
                        {"gated", moment.finite}};
  if (!moment.finite) j["integrability"]["reason"] = moment.reason;
  if (beta != 1.0 && c["speed"].get<double>() <= 0.0) {
    // the alternative speed beta N (N+1); reported, not gated
    const double alt = beta * n * (n + 1.0);
    const MGFReport rep_alt = empirical_log_mgf(s, u, u_bar, t_grid, alt, 400, c["seed"].get<std::uint64_t>());
    Json va = Json::array();
    for (const auto& v : verify_subgaussian(rep_alt, h1, eps)) va.push_back(to_json(v));
    j["alternative_speed"] = {{"speed", alt}, {"mgf", to_json(rep_alt)}, {"verdicts", va}};
  }
  if (beta == 1.0 && phi.radial() && u.radial() && phi.radial()->center == u.radial()->center) {
    Json exact = Json::array();
    for (double t : t_grid) {
      const double lhs = exact_log_mgf_beta1(phi, u, n, conv, u_bar, t, speed);
      const double rhs = speed * (0.5 * t * t * h1 + eps);
      const bool ok = lhs <= rhs + 1e-9 * std::abs(rhs);
      exact.push_back({{"t", t}, {"lhs", lhs}, {"rhs", rhs}, {"passed", ok}});
      run.passed = run.passed && ok;
    }
    j["exact_log_mgf"] = exact;
  }
  const double delta = c["delta"];
  std::size_t exceed = 0;
  for (const auto& cf : s.configs)
    if (std::abs(linear_statistic(cf, u) - u_bar) > delta) ++exceed;
  const double freq = static_cast<double>(exceed) / static_cast<double>(s.configs.size());
  const double bound = chernoff_convert(h1, delta, speed, eps);
  const double slack = 3.0 * std::sqrt(std::max(bound, 1.0 / s.configs.size()) / s.configs.size());
  j["chernoff"] = {{"delta", delta}, {"frequency", freq}, {"bound", bound}, {"passed", freq <= bound + slack}};
  if (moment.finite) run.passed = run.passed && freq <= bound + slack;
  return j;
}

Json cmd_wce(Run& run) {
  const Json& c = run.cfg;
  const Potential phi = make_potential(c);
  const SampleSet s = draw(c, &phi);
  const double sv = c["s"];
  Json reps = Json::array();
  std::vector<double> values;
  int l_max = 0;
  double tail = 0.0;
  for (const auto& cf : s.configs) {
    const WceReport r = wce(cf, sv);
    values.push_back(r.wce);
    l_max = std::max(l_max, r.l_max);
    tail = std::max(tail, r.tail_bound);
    reps.push_back(r.wce);
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return Json{{"n", c["n"]}, {"s", sv}, {"l_max", l_max}, {"tail_bound", tail}, {"median_wce", median}, {"wce", reps}};
}

Json cmd_bergman(Run& run) {
  const Json& c = run.cfg;
  const Potential phi = make_potential(c);
  const int n = c["n"];
  const Convention conv = parse_convention(c["convention"]);
  const Measure B = bergman_density(phi, n, conv);
  const fs::path path = run.out / "bergman.csv";
  {
    std::ofstream out(path);
    if (phi.radial()) {
      out << "r,density\n";
      const Point c0 = phi.radial()->center;
      for (int k = 0; k <= 300; ++k) {
        const double r = 3.0 * k / 300;
        out << format_double(r) << ',' << format_double(B.density(c0 + r)) << '\n';
      }
    } else {
      out << "x,y,density\n";
      for (int j = 0; j <= 100; ++j)
        for (int i = 0; i <= 100; ++i) {
          const Point z(-2.0 + 0.04 * i, -2.0 + 0.04 * j);
          out << format_double(z.real()) << ',' << format_double(z.imag()) << ',' << format_double(B.density(z)) << '\n';
        }
    }
  }
  run.artifacts.push_back(path.string());
  Json j{{"n", n}, {"convention", to_string(conv)}};
  j["mass"] = B.total_mass();
  if (phi.radial()) {
    const double m = weight_exponent(conv, n, 1.0);
    const Measure ref = equilibrium_measure(scaled(phi, m / n), c);
    j["h_minus1_to_equilibrium"] = h_minus1_distance(B, ref);
  }
  return j;
}

Json cmd_mesoscopic(Run& run) {
  const Json& c = run.cfg;
  const int n = c["n"];
  const std::string ens = c["ensemble"];
  if (ens == "mcmc") throw ConfigError("mesoscopic uses an exact ensemble");
  const EnsembleModel m = ensemble_model(parse_ensemble(ens), n);
  const Potential phi = m.phi;
  const SampleSet s = draw(c, &phi);
  const TestFunction u = make_u(c);
  const Point z0(c["z0"][0].get<double>(), c["z0"][1].get<double>());
  const double scale = c["scale"].get<double>() > 0.0 ? c["scale"].get<double>() : std::pow(n, -0.2);
  std::vector<double> stats;
  for (const auto& cf : s.configs) stats.push_back(mesoscopic_statistic(cf, m.mu, u, z0, scale));
  const double k = static_cast<double>(stats.size());
  double mean = 0.0, sq = 0.0;
  for (double v : stats) mean += v;
  mean /= k;
  for (double v : stats) sq += (v - mean) * (v - mean);
  const double se = std::sqrt(sq / (k - 1.0) / k);
  const bool ok = std::abs(mean) <= 3.0 * se + 1e-12;
  run.passed = ok;
  return Json{{"n", n}, {"scale", scale}, {"z0", {z0.real(), z0.imag()}}, {"mean", mean}, {"std_error", se},
              {"reps", stats.size()}, {"passed", ok}};
}

Json cmd_variance(Run& run) {
  const Json& c = run.cfg;
  const Potential phi = make_potential(c);
  const SampleSet s = draw(c, &phi);
  const TestFunction u = make_u(c);
  const VarianceReport r = fluctuation_variance(s, u, h1_norm_sq(u));
  const bool ok = std::abs(r.relative_error) <= c["tolerance"].get<double>();
  run.passed = ok;
  Json j = to_json(r);
  j["passed"] = ok;
  return j;
}

Json cmd_validate(Run& run) {
  Json d = validate(run.cfg);
  run.passed = !has_errors(d);
  return Json{{"diagnostics", d}, {"valid", run.passed}};
}

void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) {
    if (it.value().is_object() && into.contains(it.key()) && into[it.key()].is_object())
      merge(into[it.key()], it.value());
    else
      into[it.key()] = it.value();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coulomb gas lab: potential theory, determinantal formulas and sampling for 2D Coulomb gases"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config; flags override its fields");

  // flags, recorded only when given
  Json flags = Json::object();
  auto str_opt = [&](const std::string& flag, const std::string& key) {
    auto* o = app.add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; });
    return o;
  };
  auto num_opt = [&](const std::string& flag, const std::string& key) {
    return app.add_option_function<double>(flag, [&flags, key](const double& v) { flags[key] = v; });
  };
  auto int_opt = [&](const std::string& flag, const std::string& key) {
    return app.add_option_function<long long>(flag, [&flags, key](const long long& v) { flags[key] = v; });
  };
  str_opt("--potential", "potential")->description("fs | quad | quad_charge | fs_bump | file");
  str_opt("--potential-file", "potential_file");
  str_opt("--charges", "charges")->description("JSON file of [{\"x\":..,\"y\":..,\"a\":..}]");
  num_opt("--lambda", "lambda");
  num_opt("--amplitude", "amplitude");
  int_opt("--n", "n");
  num_opt("--beta", "beta");
  str_opt("--convention", "convention")->description("adjoint | exterior_Nphi | exterior_NplusP");
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { flags["seed"] = v; });
  num_opt("--R", "grid.R");
  num_opt("--h", "grid.h");
  str_opt("--output-dir", "output_dir");
  str_opt("--method", "method")->description("auto | gram | brute | thermo");
  str_opt("--ensemble", "ensemble")->description("spherical | ginibre | ginibre_moduli | mcmc");
  int_opt("--reps", "reps");
  str_opt("--u", "u")->description("zonal | bump | real | constant");
  app.add_option_function<std::vector<double>>("--t", [&](const std::vector<double>& v) { flags["t"] = v; })
      ->delimiter(',')
      ->allow_extra_args(false);
  num_opt("--s", "s");
  app.add_option_function<std::vector<double>>("--z0", [&](const std::vector<double>& v) {
        if (v.size() != 2) throw CLI::ValidationError("--z0 takes x,y");
        flags["z0"] = v;
      })->delimiter(',');
  num_opt("--scale", "scale");
  num_opt("--delta", "delta");
  num_opt("--speed", "speed");
  str_opt("--format", "format")->description("csv | cgcf");
  int_opt("--steps", "steps");
  int_opt("--burn-in", "burn_in");
  int_opt("--thin", "thin");
  num_opt("--sigma", "sigma");
  int_opt("--chains", "chains");
  num_opt("--tolerance", "tolerance");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"eq-solve", "solve the obstacle problem for the equilibrium measure"},
      {"logz", "log partition function"},
      {"error-seq", "error sequence and its a-priori bound"},
      {"sample", "draw configurations"},
      {"verify-subgaussian", "check the sub-Gaussian moment bound"},
      {"wce", "worst-case error of sampled node sets"},
      {"bergman", "normalized Bergman density"},
      {"mesoscopic", "mesoscopic linear statistics"},
      {"variance", "fluctuation variance against the Dirichlet energy"},
      {"validate", "check a config without running it"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  const auto start = std::chrono::steady_clock::now();
  Run run;
  try {
    run.cfg = defaults();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("config file not found: " + config_path);
      merge(run.cfg, Json::parse(in));
    }
    for (auto it = flags.begin(); it != flags.end(); ++it) {
      const std::string& key = it.key();
      if (key.rfind("grid.", 0) == 0)
        run.cfg["grid"][key.substr(5)] = it.value();
      else
        run.cfg[key] = it.value();
    }
    run.cfg["command"] = app.get_subcommands().front()->get_name();
    if (run.cfg["convention"] == "adjoint") run.cfg["convention"] = "adjoint_Nplus1";
    const std::string command = run.cfg["command"];

    if (command != "validate") {
      const Json diags = validate(run.cfg);
      if (has_errors(diags)) {
        for (const auto& d : diags)
          if (d["level"] == "error") std::cerr << "error: " << d["message"].get<std::string>() << '\n';
        return kExitError;
      }
    }
    run.out = run.cfg["output_dir"].get<std::string>();
    fs::create_directories(run.out);

    Json payload;
    if (command == "eq-solve") payload = cmd_eq_solve(run);
    else if (command == "logz") payload = cmd_logz(run);
    else if (command == "error-seq") payload = cmd_error_seq(run);
    else if (command == "sample") payload = cmd_sample(run);
    else if (command == "verify-subgaussian") payload = cmd_verify_subgaussian(run);
    else if (command == "wce") payload = cmd_wce(run);
    else if (command == "bergman") payload = cmd_bergman(run);
    else if (command == "mesoscopic") payload = cmd_mesoscopic(run);
    else if (command == "variance") payload = cmd_variance(run);
    else payload = cmd_validate(run);

    const std::string report_path = (run.out / (command + ".json")).string();
    write_json_atomic(report_path, payload);
    run.artifacts.push_back(report_path);
    std::cout << payload.dump(2) << '\n';

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest{{"config", run.cfg},
                  {"tool_version", kVersion},
                  {"wall_time_seconds", wall},
                  {"artifacts", run.artifacts},
                  {"passed", run.passed}};
    write_json_atomic((run.out / "manifest.json").string(), manifest);
    if (command == "validate" && !run.passed) {
      for (const auto& d : payload["diagnostics"])
        if (d["level"] == "error") std::cerr << "error: " << d["message"].get<std::string>() << '\n';
      return kExitError;
    }
    return run.passed ? kExitOk : kExitFailed;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid config: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
