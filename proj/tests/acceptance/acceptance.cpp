// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "coulomb/brute_force.hpp"
#include "coulomb/determinantal.hpp"
#include "coulomb/deviations.hpp"
#include "coulomb/energies.hpp"
#include "coulomb/envelope.hpp"
#include "coulomb/geometry.hpp"
#include "coulomb/quadrature.hpp"
#include "coulomb/sampling.hpp"

using namespace coulomb;

namespace tol {
constexpr double moment_rel = 1e-10;
constexpr double partition_ratio = 2.0;
constexpr double green_constant = 1e-3;
constexpr double green_sup = 1e-9;
constexpr double obstacle_sup = 5e-3;
constexpr double free_energy = 1e-3;
constexpr double radii_cells = 2.0;
constexpr double j_contraction_h = 10.0;
constexpr double orthogonality = 1e-2;
constexpr double eps_psi0 = 1e-10;
constexpr double holder_bar_multiple = 10.0;
constexpr double ci_multiple = 3.0;
constexpr double bergman_pointwise = 1e-10;
constexpr double bergman_slope = -0.4;
constexpr double wce_single = 1e-8;
constexpr double wce_slope = 0.15;
constexpr double variance_rel = 0.15;
constexpr double alpha = 0.01;
}  // namespace tol

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

EnvelopeOptions grid(double h, double radius) {
  EnvelopeOptions o;
  o.h = h;
  o.radius = radius;
  return o;
}

double closed_p_quad(Point z) {
  const double r2 = std::norm(z);
  return r2 <= 1.0 ? r2 : std::log(r2) + 1.0;
}

// lattice function, continued by log|z|^2 plus its mean boundary offset
Potential extend(const GridFunction& f) {
  const Lattice& g = *f.grid;
  double offset = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.kind[k] == NodeKind::boundary) {
      offset += f[k] - std::log(std::norm(g.node(k)));
      ++count;
    }
  offset /= count;
  return from_function("lattice", [f, offset](Point z) {
    const double v = f.interpolate(z);
    return std::isfinite(v) ? v : std::log(std::norm(z)) + offset;
  });
}

Potential fs_bump() { return plus(fs_potential_fn(), radial_bump({0.0, 0.0}, 0.5, 0.8, 0.3)); }

Outcome c1() {
  double worst = 0.0;
  for (int m = 2; m <= 50; ++m)
    for (int j = 0; j <= m - 2; ++j) {
      // pi int_R e^{(j+1)s} (1+e^s)^{-m} ds
      const double num = kPi * integrate_split(
                                   [&](double s) { return std::exp((j + 1.0) * s - m * std::log1p(std::exp(s))); },
                                   -60.0, 60.0, {}, 0.25, 12);
      worst = std::max(worst, std::abs(fs_moment(j, m) / num - 1.0));
    }
  return {worst <= tol::moment_rel, fmt("max relative deviation %.2e over 0<=j<=m-2, m<=50", worst)};
}

Outcome c2() {
  auto r = [](int n) { return log_z_fs(n) + 0.5 * n * n - 0.5 * n * std::log(n); };
  const double ref = std::abs(r(50)) / 50.0;
  double worst = 0.0;
  for (int n : {10, 25, 50, 100, 200, 400}) worst = std::max(worst, std::abs(r(n)) / n);
  return {worst <= tol::partition_ratio * ref, fmt("max |r_N|/N = %.4f, 2|r_50|/50 = %.4f", worst, 2.0 * ref)};
}

Outcome c3() {
  const double c = green_constant();
  std::mt19937_64 gen(2024);
  std::cauchy_distribution<double> cd;
  double sup = -kInf;
  for (int k = 0; k < 100000; ++k) {
    const Point z(cd(gen), cd(gen)), w(cd(gen), cd(gen));
    if (z == w) continue;
    sup = std::max(sup, -green_g0(z, w));
  }
  double antipodal = -kInf;
  for (Point z : {Point(1.0, 0.0), Point(0.3, -2.0), Point(1e-3, 1e-3), Point(50.0, 7.0)})
    antipodal = std::max(antipodal, -green_g0(z, -1.0 / std::conj(z)));
  sup = std::max(sup, antipodal);
  const bool ok = std::abs(c + 0.5) <= tol::green_constant && std::abs(sup) <= tol::green_sup;
  return {ok, fmt("green_constant = %.6f, sup(-G0) = %.2e", c, sup)};
}

Outcome c4() {
  const double h = 1.0 / 128;
  const EquilibriumResult q = project_envelope(quadratic(1.0), grid(h, 1.6));
  const Lattice& g = q.lattice();
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k)) err = std::max(err, std::abs(q.p_phi[k] - closed_p_quad(g.node(k))));
  const double f_fs = free_energy(fs_potential_fn());
  const EquilibriumResult a = project_envelope(quasi_hole(quadratic(1.0), {{Point(0.0, 0.0), 0.5}}), grid(h, 1.6));
  const auto [rin, rout] = a.droplet_radii();
  const double din = std::abs(rin - std::sqrt(0.5)), dout = std::abs(rout - std::sqrt(1.5));
  const bool ok = err <= tol::obstacle_sup && std::abs(q.free_energy - 0.75) <= tol::free_energy &&
                  std::abs(f_fs - 0.5) <= tol::free_energy && din <= tol::radii_cells * h &&
                  dout <= tol::radii_cells * h;
  return {ok, fmt("sup|P_h - P| = %.2e, F(|z|^2) = %.6f, F(psi0) = %.6f, radii %.4f %.4f (off by %.4f %.4f)", err,
                  q.free_energy, f_fs, rin, rout, din, dout)};
}

Outcome c5() {
  // random smooth pairs: phi a dilated quadratic plus a Gaussian bump, u a signed bump
  const double h = 1.0 / 64, radius = 1.8;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int j_fail = 0, mono_fail = 0, idem_fail = 0, orth_fail = 0;
  double worst_j = 0.0, worst_orth = 0.0, worst_idem = 0.0;
  std::vector<std::pair<Potential, EquilibriumResult>> bases;
  for (int b = 0; b < 4; ++b) {
    const double lambda = 0.9 + 0.4 * U(gen);
    const Point c(0.4 * U(gen) - 0.2, 0.4 * U(gen) - 0.2);
    const Potential phi = plus(quadratic(lambda), gaussian_bump(c, 0.3 + 0.2 * U(gen), 0.3 * U(gen) - 0.15));
    bases.emplace_back(phi, project_envelope(phi, grid(h, radius)));
  }
  for (int k = 0; k < 20; ++k) {
    const auto& [phi, a] = bases[static_cast<std::size_t>(k % 4)];
    const Point c(0.8 * U(gen) - 0.4, 0.8 * U(gen) - 0.4);
    const double height = (k % 2 ? 1.0 : -1.0) * (0.1 + 0.3 * U(gen));
    const TestFunction u = k % 3 ? radial_bump(c, 0.1 + 0.2 * U(gen), 0.4 + 0.3 * U(gen), height)
                                 : gaussian_bump(c, 0.2 + 0.3 * U(gen), height);
    const Potential pu = plus(phi, u);
    const EquilibriumResult b = project_envelope(pu, grid(h, radius));
    const double ratio = dirichlet_J(b, a) / dirichlet_J(u);
    worst_j = std::max(worst_j, ratio);
    if (ratio > 1.0 + tol::j_contraction_h * h) ++j_fail;
    const Lattice& g = a.lattice();
    double wrong_way = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.interior(i)) wrong_way = std::max(wrong_way, height > 0 ? a.p_phi[i] - b.p_phi[i] : b.p_phi[i] - a.p_phi[i]);
    if (wrong_way > a.tol + b.tol) ++mono_fail;
    if (k % 5 == 0) {
      const GridFunction once = b.p_phi;
      const EquilibriumResult twice = project_envelope(extend(once), grid(h, radius));
      double d = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.interior(i)) d = std::max(d, std::abs(twice.p_phi[i] - once[i]));
      worst_idem = std::max(worst_idem, d);
      if (d > 10.0 * b.tol) ++idem_fail;
    }
    if (k < 3) {
      const EquilibriumResult fine = project_envelope(pu, grid(1.0 / 128, 1.6));
      const double o = orthogonality_residual(fine, pu);
      worst_orth = std::max(worst_orth, o);
      if (o > tol::orthogonality) ++orth_fail;
    }
  }
  const bool ok = !j_fail && !mono_fail && !idem_fail && !orth_fail;
  return {ok, fmt("20 pairs: max J ratio %.4f (limit %.4f), monotonicity failures %d, idempotence max %.1e, "
                  "orthogonality max %.1e at h=1/128",
                  worst_j, 1.0 + tol::j_contraction_h * h, mono_fail, worst_idem, worst_orth)};
}

Outcome c6() {
  double worst0 = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const ErrorSequenceReport r = error_sequence(
        fs_potential_fn(), n, 1.0, log_partition_beta1(fs_potential_fn(), n, Convention::exterior_NplusP), 0.5);
    worst0 = std::max(worst0, std::abs(r.total));
  }
  const Potential phi = fs_bump();
  const double F = free_energy(phi);
  const ErrorBound bound = error_bound(phi);
  bool ok = worst0 <= tol::eps_psi0;
  std::string eps;
  for (int n : {8, 16, 32, 64}) {
    const double e = error_sequence(phi, n, 1.0, log_partition_beta1(phi, n, Convention::exterior_NplusP), F).total;
    ok = ok && e >= 0.0 && e <= bound.bound(n);
    eps += fmt(" N=%d: %.5f<=%.5f", n, e, bound.bound(n));
  }
  return {ok, fmt("psi0 max |eps| %.1e; bump (C_phi %.4f):", worst0, bound.c_phi) + eps};
}

Outcome c7() {
  const PartitionValue half = brute_force_log_z(fs_potential_fn(), 2, 0.5, Convention::exterior_NplusP);
  const double rhs = holder_rhs(fs_potential_fn(), 2, 0.5);
  const double margin = rhs - 2.0 * half.log_z;
  const double bar = std::max(half.error_bar, 1e-300);
  const Measure nu = mu0_measure();
  const double g_half = gibbs_lower_bound(fs_potential_fn(), 2, 0.5, Convention::exterior_NplusP, nu);
  const double g_one = gibbs_lower_bound(fs_potential_fn(), 2, 1.0, Convention::exterior_NplusP, nu);
  const double z_one = log_partition_beta1(fs_potential_fn(), 2, Convention::exterior_NplusP).log_z;
  const bool ok = margin > tol::holder_bar_multiple * bar && 2.0 * half.log_z - 2.0 * half.error_bar >= g_half &&
                  z_one >= g_one;
  return {ok, fmt("2 log Z = %.6f <= %.6f (margin %.4f, error bar %.1e); Gibbs beta=1/2: %.4f >= %.4f, beta=1: "
                  "%.4f >= %.4f",
                  2.0 * half.log_z, rhs, margin, half.error_bar, 2.0 * half.log_z, g_half, z_one, g_one)};
}

Outcome c8() {
  const int n = 64;
  const double speed = n * (n + 1.0);
  const TestFunction u = zonal_function();
  const double h1 = h1_norm_sq(u);
  const SampleSet s = exact_samples(Ensemble::spherical, n, 2000, 8);
  const std::vector<double> ts{-1.0, -0.5, 0.5, 1.0};
  const MGFReport r = empirical_log_mgf(s, u, 0.0, ts, speed);
  const auto verdicts = verify_subgaussian(r, h1, 0.0);
  bool ok = std::abs(h1 - 2.0 / 3.0) <= 1e-6;
  double min_excess = kInf, min_exact = kInf;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto& v = verdicts[k];
    min_excess = std::min(min_excess, v.margin - tol::ci_multiple * v.ci);
    const double exact = exact_log_mgf_beta1(fs_potential_fn(), u, n, Convention::adjoint_Nplus1, 0.0, ts[k], speed);
    min_exact = std::min(min_exact, v.rhs - exact);
    ok = ok && v.margin > tol::ci_multiple * v.ci && exact <= v.rhs * (1.0 + 1e-12);
  }
  const double delta = 0.2;
  int hits = 0;
  for (const auto& c : s.configs) hits += std::abs(linear_statistic(c, u)) > delta;
  const double freq = hits / static_cast<double>(s.configs.size());
  const double bound = chernoff_convert(h1, delta, speed, 0.0);
  ok = ok && freq <= bound;
  return {ok, fmt("||u||^2 = %.6f; min(margin - 3CI) = %.2f; min exact margin = %.4f; Chernoff frequency %.4f <= %.2e",
                  h1, min_excess, min_exact, freq, bound)};
}

Outcome c9() {
  const Measure b = bergman_density(fs_potential_fn(), 8, Convention::adjoint_Nplus1);
  double worst = 0.0;
  std::mt19937_64 gen(9);
  std::cauchy_distribution<double> cd;
  for (int k = 0; k < 2000; ++k) {
    const Point z(cd(gen), cd(gen));
    worst = std::max(worst, std::abs(b.density(z) - mu0_density(z)) / mu0_density(z));
  }
  std::vector<double> x, y;
  std::string seq;
  const Measure law = circular_law();
  for (int n : {16, 32, 64, 128}) {
    const double d = h_minus1_distance(bergman_density(quadratic(1.0), n, Convention::exterior_Nphi), law);
    x.push_back(std::log(n));
    y.push_back(std::log(d));
    seq += fmt(" %.4f", d);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < y.size(); ++i) decreasing = decreasing && y[i] < y[i - 1];
  const double sl = slope(x, y);
  const bool ok = worst <= tol::bergman_pointwise && decreasing && sl <= tol::bergman_slope;
  return {ok, fmt("B_8 vs mu0 max relative %.1e; H^-1 distances", worst) + seq + fmt(", slope %.3f", sl)};
}

Outcome c10() {
  const WceReport one = wce(Configuration{{{0.0, 0.0}}}, 2.0);
  std::vector<double> x, y;
  std::string seq;
  for (int n : {16, 32, 64, 128, 256}) {
    const SampleSet s = exact_samples(Ensemble::spherical, n, 50, 10 + n);
    std::vector<double> w;
    for (const auto& c : s.configs) w.push_back(wce(c, 2.5).wce);
    const double m = median(w);
    x.push_back(std::log(n));
    y.push_back(std::log(m));
    seq += fmt(" %.5f", m);
  }
  const double sl = slope(x, y);
  const bool ok = std::abs(one.wce - 1.0) <= tol::wce_single && std::abs(sl + 1.0) <= tol::wce_slope;
  return {ok, fmt("single point wce - 1 = %.1e (l_max %d); medians", one.wce - 1.0, one.l_max) + seq +
                  fmt(", slope %.3f", sl)};
}

Outcome c11() {
  const TestFunction u = radial_bump({0.0, 0.0}, 0.3, 0.6, 1.0);
  const double sigma2 = h1_norm_sq(u);
  const SampleSet s = exact_samples(Ensemble::ginibre_moduli, 400, 2000, 11);
  const VarianceReport v = fluctuation_variance(s, u, sigma2);
  return {std::abs(v.relative_error) <= tol::variance_rel,
          fmt("variance %.4f +- %.4f vs sigma^2 %.4f (relative %+.3f)", v.variance, v.std_error, sigma2,
              v.relative_error)};
}

Outcome c12() {
  SamplerConfig cfg;
  cfg.n = 32;
  cfg.beta = 1.0;
  cfg.potential_convention = Convention::exterior_Nphi;
  cfg.steps = 44000;
  cfg.burn_in = 4000;
  cfg.thin = 20;
  cfg.seed = 12;
  const SampleSet chain = mcmc_run(cfg, quadratic(1.0));
  const SampleSet again = mcmc_run(cfg, quadratic(1.0));
  bool identical = chain.configs.size() == again.configs.size();
  for (std::size_t k = 0; identical && k < chain.configs.size(); ++k)
    identical = chain.configs[k].points == again.configs[k].points;
  std::vector<double> r_chain, r_exact, m2;
  for (const auto& c : chain.configs) {
    double a = 0.0;
    for (Point z : c.points) {
      r_chain.push_back(std::abs(z));
      a += std::norm(z);
    }
    m2.push_back(a);
  }
  const SampleSet exact = exact_samples(Ensemble::ginibre, 32, 1000, 12);
  for (const auto& c : exact.configs)
    for (Point z : c.points) r_exact.push_back(std::abs(z));
  // one effective observation per configuration is conservative for the pooled radii
  const double tau = std::max(1.0, integrated_autocorr_time(m2));
  const double n1 = chain.configs.size() / tau, n2 = static_cast<double>(exact.configs.size());
  const double d = ks_two_sample(r_chain, r_exact);
  const double p_ks = kolmogorov_pvalue(d, n1 * n2 / (n1 + n2));

  SamplerConfig two;
  two.n = 2;
  two.beta = 1.0;
  two.potential_convention = Convention::adjoint_Nplus1;
  two.steps = 202000;
  two.burn_in = 2000;
  two.thin = 40;
  two.seed = 21;
  const SampleSet pairs = mcmc_run(two, fs_potential_fn());
  const SphereCells cells{{kPi / 3, 2 * kPi / 3}, 2};
  const int C = cells.count();
  std::vector<double> observed(static_cast<std::size_t>(C * C), 0.0);
  for (const auto& c : pairs.configs)
    observed[static_cast<std::size_t>(cells.cell_of(c.points[0]) * C + cells.cell_of(c.points[1]))] += 1.0;
  const auto probs = two_point_cell_probabilities(fs_potential_fn(), 1.0, Convention::adjoint_Nplus1, cells);
  const ChiSquareResult chi = chi_square_test(observed, probs);
  const bool ok = identical && p_ks > tol::alpha && chi.p_value > tol::alpha;
  return {ok, fmt("KS D = %.4f (n_eff %.0f/%.0f, p = %.3f); chi^2 = %.2f on %d dof (p = %.3f, %zu samples); "
                  "reproducible: %s",
                  d, n1, n2, p_ks, chi.statistic, chi.dof, chi.p_value, pairs.configs.size(),
                  identical ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"FS moment closed form", c1},
      {"partition asymptotics", c2},
      {"Green constant", c3},
      {"obstacle solver ground truth", c4},
      {"structural inequalities", c5},
      {"error sequence positivity and decay", c6},
      {"Holder/Jensen reduction", c7},
      {"sub-Gaussian verification", c8},
      {"Bergman identities", c9},
      {"wce/discrepancy", c10},
      {"bulk CLT variance", c11},
      {"MCMC validity", c12}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
