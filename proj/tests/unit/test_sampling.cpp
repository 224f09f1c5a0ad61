#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "coulomb/deviations.hpp"
#include "coulomb/sampling.hpp"

using namespace coulomb;
using doctest::Approx;

namespace {

double mean_of(const std::vector<double>& x) {
  double a = 0.0;
  for (double v : x) a += v;
  return a / static_cast<double>(x.size());
}

double std_error(const std::vector<double>& x, double tau = 1.0) {
  const double m = mean_of(x);
  double v = 0.0;
  for (double e : x) v += (e - m) * (e - m);
  v /= static_cast<double>(x.size() - 1);
  return std::sqrt(v * tau / static_cast<double>(x.size()));
}

std::filesystem::path scratch(const char* name) {
  return std::filesystem::temp_directory_path() / ("coulomb_sampling_" + std::to_string(::getpid()) + name);
}

}  // namespace

TEST_CASE("rng is deterministic and stream-split") {
  Rng a(42), b(42), c(42, 1);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  Rng d(7);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = d.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    const double g = d.normal();
    s += g;
    s2 += g * g;
  }
  CHECK(std::abs(s / 20000) < 0.03);
  CHECK(s2 / 20000 == Approx(1.0).epsilon(0.03));
  CHECK(Rng(3).split(5).next() == Rng(3).split(5).next());
}

TEST_CASE("hamiltonian") {
  const Configuration unit{{{0.0, 0.0}, {1.0, 0.0}}};
  CHECK(hamiltonian_weighted(unit, quadratic(1.0), 0.0) == Approx(0.0).scale(1.0));
  const Configuration two{{{0.0, 0.0}, {2.0, 0.0}}};
  CHECK(hamiltonian(two, quadratic(1.0), 2, Convention::exterior_Nphi) ==
        Approx(8.0 - std::log(4.0)).epsilon(1e-14));
  CHECK(hamiltonian(two, plus(quadratic(1.0), constant_function(0.0)), 2, Convention::exterior_Nphi) ==
        Approx(8.0 - std::log(4.0)).epsilon(1e-14));
  // common translation only moves the one-body part
  Rng rng(11);
  Configuration c;
  for (int i = 0; i < 7; ++i) c.points.push_back(rng.complex_normal());
  const Point shift(0.4, -1.1);
  Configuration moved = c;
  for (auto& p : moved.points) p += shift;
  const Potential phi = quadratic(1.0);
  const double m = 7.0;
  double one_body = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) one_body += m * (phi(moved.points[i]) - phi(c.points[i]));
  CHECK(hamiltonian(moved, phi, 7, Convention::exterior_Nphi) - hamiltonian(c, phi, 7, Convention::exterior_Nphi) ==
        Approx(one_body).epsilon(1e-12));
  // coincident points and poles
  CHECK_THROWS(hamiltonian(Configuration{{{1.0, 1.0}, {1.0, 1.0}}}, phi, 2, Convention::exterior_Nphi));
  const Potential holed = quasi_hole(quadratic(1.0), {{{0.5, 0.0}, 0.5}});
  CHECK(hamiltonian(Configuration{{{0.5, 0.0}, {0.0, 1.0}}}, holed, 2, Convention::exterior_Nphi) == kInf);
}

TEST_CASE("detailed balance of single-site moves") {
  const Potential phi = plus(fs_potential_fn(), radial_bump({0.2, 0.1}, 0.1, 0.7, 0.4));
  const double m = 3.0, beta = 0.7;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Configuration x{{rng.complex_normal(), rng.complex_normal()}};
    const std::size_t i = rng.uniform() < 0.5 ? 0 : 1;
    const Point w = x.points[i] + 0.3 * rng.complex_normal();
    Configuration y = x;
    y.points[i] = w;
    const double fwd = delta_energy(x, i, w, phi, m);
    const double bwd = delta_energy(y, i, x.points[i], phi, m);
    const double exact = hamiltonian_weighted(y, phi, m) - hamiltonian_weighted(x, phi, m);
    CHECK(fwd == Approx(exact).epsilon(1e-10).scale(1.0));
    CHECK(fwd + bwd == Approx(0.0).epsilon(1e-10).scale(1.0));
    const double a_fwd = std::min(1.0, std::exp(-beta * fwd));
    const double a_bwd = std::min(1.0, std::exp(-beta * bwd));
    CHECK(a_fwd / a_bwd == Approx(std::exp(-beta * exact)).epsilon(1e-9));
  }
}

TEST_CASE("convention guard") {
  CHECK_THROWS_AS(check_convention(fs_potential_fn(), Convention::exterior_Nphi), InadmissiblePotential);
  CHECK_NOTHROW(check_convention(fs_potential_fn(), Convention::adjoint_Nplus1));
  CHECK_NOTHROW(check_convention(quadratic(1.0), Convention::exterior_Nphi));
  SamplerConfig cfg;
  cfg.potential_convention = Convention::exterior_Nphi;
  CHECK_THROWS(mcmc_run(cfg, fs_potential_fn()));
}

TEST_CASE("mcmc is reproducible and symmetric") {
  SamplerConfig cfg;
  cfg.n = 16;
  cfg.beta = 1.0;
  cfg.potential_convention = Convention::adjoint_Nplus1;
  cfg.steps = 6000;
  cfg.burn_in = 500;
  cfg.thin = 5;
  cfg.seed = 9;
  const SampleSet a = mcmc_run(cfg, fs_potential_fn());
  const SampleSet b = mcmc_run(cfg, fs_potential_fn());
  REQUIRE(a.configs.size() == b.configs.size());
  for (std::size_t k = 0; k < a.configs.size(); ++k)
    for (std::size_t i = 0; i < a.configs[k].points.size(); ++i) REQUIRE(a.configs[k].points[i] == b.configs[k].points[i]);
  CHECK(a.acceptance_rate > 0.2);
  CHECK(a.acceptance_rate < 0.7);
  std::vector<double> u;
  for (const auto& c : a.configs) u.push_back(linear_statistic(c, zonal_function()));
  const double tau = std::max(1.0, integrated_autocorr_time(u));
  CHECK(std::abs(mean_of(u)) <= 3.0 * std_error(u, tau));
}

TEST_CASE("autocorrelation time") {
  Rng rng(1);
  std::vector<double> white(4000), ar(4000);
  double x = 0.0;
  for (std::size_t i = 0; i < white.size(); ++i) {
    white[i] = rng.normal();
    x = 0.9 * x + rng.normal();
    ar[i] = x;
  }
  CHECK(integrated_autocorr_time(white) == Approx(1.0).epsilon(0.25));
  // 1 + 2 rho / (1 - rho) = 19
  CHECK(integrated_autocorr_time(ar) == Approx(19.0).epsilon(0.3));
}

TEST_CASE("Ginibre sampler") {
  const SampleSet s = exact_samples(Ensemble::ginibre, 64, 200, 3);
  std::vector<double> m2, im3;
  for (const auto& c : s.configs) {
    double a = 0.0, b = 0.0;
    for (Point z : c.points) {
      a += std::norm(z);
      b += std::pow(z, 3).imag();
    }
    m2.push_back(a / 64);
    im3.push_back(b / 64);
  }
  CHECK(mean_of(m2) == Approx(0.5).epsilon(0.02));
  CHECK(std::abs(mean_of(im3)) <= 3.0 * std_error(im3));
  const Configuration big = ginibre_sample(256, 4);
  const double inside = static_cast<double>(std::count_if(big.points.begin(), big.points.end(),
                                                          [](Point z) { return std::abs(z) <= 1.0; })) /
                        256.0;
  CHECK(inside >= 0.97);
  std::vector<double> re;
  for (int r = 0; r < 50; ++r)
    for (Point z : ginibre_sample(64, 100 + r).points) re.push_back(z.real());
  CHECK(std::abs(mean_of(re)) <= 3.0 * std_error(re));
  // moduli sampler agrees in radial law
  std::vector<double> r1, r2;
  for (const auto& c : exact_samples(Ensemble::ginibre_moduli, 64, 200, 5).configs)
    for (Point z : c.points) r1.push_back(std::abs(z));
  for (const auto& c : s.configs)
    for (Point z : c.points) r2.push_back(std::abs(z));
  CHECK(ks_two_sample(r1, r2) < 0.02);
}

TEST_CASE("spherical sampler") {
  const SampleSet s = exact_samples(Ensemble::spherical, 64, 500, 8);
  double inside = 0.0, total = 0.0;
  std::vector<double> u, im3;
  for (const auto& c : s.configs) {
    for (Point z : c.points) {
      inside += std::abs(z) <= 1.0;
      total += 1.0;
    }
    u.push_back(linear_statistic(c, zonal_function()));
  }
  CHECK(std::abs(inside / total - 0.5) <= 0.02);
  CHECK(std::abs(mean_of(u)) <= 3.0 * std_error(u));
  std::vector<double> chordal;
  for (int r = 0; r < 20; ++r)
    for (Point z : spherical_sample(128, 50 + r).points) chordal.push_back(std::norm(z) / (1.0 + std::norm(z)));
  const double d = ks_one_sample(chordal, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d < 1.63 / std::sqrt(128.0));
  int redraws = -1;
  spherical_sample(8, 1, &redraws);
  CHECK(redraws == 0);
}

TEST_CASE("thermodynamic integration at beta = 1 is the Gram value") {
  SamplerConfig h;
  h.steps = 200;
  h.burn_in = 50;
  const PartitionValue t = thermo_log_z(quadratic(1.0), 6, 1.0, h);
  CHECK(t.log_z == Approx(log_partition_beta1(quadratic(1.0), 6, Convention::exterior_NplusP).log_z).epsilon(1e-12));
  CHECK_THROWS(thermo_log_z(quadratic(1.0), 6, 1.5, h));
}

TEST_CASE("configuration files round trip") {
  Rng rng(2);
  Configuration c;
  for (int i = 0; i < 33; ++i) c.points.push_back(rng.complex_normal() * 1e3);
  c.points.push_back({1e-300, -0.1});
  const auto csv = scratch(".csv"), bin = scratch(".cgcf");
  write_configuration_csv(csv.string(), c);
  write_cgcf(bin.string(), c);
  const Configuration a = read_configuration_csv(csv.string()), b = read_cgcf(bin.string());
  REQUIRE(a.points.size() == c.points.size());
  REQUIRE(b.points.size() == c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(a.points[i] == c.points[i]);
    CHECK(b.points[i] == c.points[i]);
  }
  CHECK(std::filesystem::file_size(bin) == 4 + 2 + 4 + 16 * c.points.size());
  std::filesystem::remove(csv);
  std::filesystem::remove(bin);
  CHECK_THROWS(read_cgcf(scratch(".missing").string()));
}
