#include <cmath>

#include "doctest.h"

#include "coulomb/deviations.hpp"
#include "coulomb/energies.hpp"
#include "oracle_values.hpp"

using namespace coulomb;
using doctest::Approx;

namespace {

Configuration random_config(int n, std::uint64_t seed) {
  Rng rng(seed);
  Configuration c;
  for (int i = 0; i < n; ++i) c.points.push_back(rng.complex_normal());
  return c;
}

SampleSet spherical_set(int n, int reps, std::uint64_t seed) { return exact_samples(Ensemble::spherical, n, reps, seed); }

// rotation of the sphere expressed in the stereographic chart
Point mobius_rotation(Point z, Point a) { return (z - a) / (1.0 + std::conj(a) * z); }

}  // namespace

TEST_CASE("linear statistics") {
  const Configuration c = random_config(9, 4);
  CHECK(linear_statistic(c, constant_function(2.5)) == Approx(2.5).epsilon(1e-15));
  CHECK(linear_statistic(Configuration{{{0.0, 0.0}, {1.0, 0.0}}}, abs_sq()) == Approx(0.5).epsilon(1e-15));
  const TestFunction u = zonal_function(), v = gaussian_bump({0.2, 0.0}, 0.5, 1.0);
  CHECK(linear_statistic(c, sum(scaled(u, 2.0), scaled(v, -3.0))) ==
        Approx(2.0 * linear_statistic(c, u) - 3.0 * linear_statistic(c, v)).epsilon(1e-13));
}

TEST_CASE("equilibrium means") {
  CHECK(equilibrium_mean(abs_sq(), uniform_disk()) == Approx(0.5).epsilon(1e-10));
  CHECK(equilibrium_mean(zonal_function(), mu0_measure()) == Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(equilibrium_mean(constant_function(3.0), mu0_measure()) == Approx(3.0).epsilon(1e-12));
  EnvelopeOptions opt;
  opt.h = 1.0 / 32;
  opt.radius = 2.0;
  const EquilibriumResult eq = project_envelope(quadratic(1.0), opt);
  CHECK(equilibrium_mean(abs_sq(), eq) == Approx(0.5).epsilon(2e-2));
}

TEST_CASE("empirical log-MGF") {
  const SampleSet s = spherical_set(16, 300, 2);
  const double speed = 16.0 * 17.0;
  const MGFReport zero = empirical_log_mgf(s, zonal_function(), 0.0, {0.0}, speed);
  CHECK(zero.log_mgf[0] == 0.0);
  CHECK(zero.ci_half_width[0] == 0.0);
  const MGFReport flat = empirical_log_mgf(s, constant_function(1.7), 1.7, {-1.0, 0.5, 1.0}, speed);
  for (double v : flat.log_mgf) CHECK(v == Approx(0.0).scale(1.0).epsilon(1e-12));
  // Jensen: log E e^{tX} >= t E X for the same samples
  double mean = 0.0;
  for (const auto& c : s.configs) mean += linear_statistic(c, zonal_function());
  mean /= static_cast<double>(s.configs.size());
  const std::vector<double> ts{-0.02, -0.01, 0.01, 0.02};
  const MGFReport r = empirical_log_mgf(s, zonal_function(), 0.0, ts, speed);
  for (std::size_t k = 0; k < ts.size(); ++k) CHECK(r.log_mgf[k] >= speed * ts[k] * mean - 1e-12);
  CHECK(r.n_samples == 300);
  // exact beta = 1 value is convex in t with zero at t = 0
  const auto ex = [](double t) {
    return exact_log_mgf_beta1(fs_potential_fn(), zonal_function(), 16, Convention::adjoint_Nplus1, 0.0, t, 272.0);
  };
  CHECK(ex(0.0) == Approx(0.0).scale(1.0).epsilon(1e-10));
  CHECK(ex(0.5) + ex(-0.5) >= 2.0 * ex(0.0));
  CHECK(ex(0.5) <= 272.0 * 0.125 * oracle::h1_zonal + 1e-9);
}

TEST_CASE("sub-Gaussian verdicts") {
  const SampleSet s = spherical_set(16, 300, 3);
  const MGFReport r = empirical_log_mgf(s, zonal_function(), 0.0, {0.0, 0.5}, 272.0);
  const auto v = verify_subgaussian(r, oracle::h1_zonal, 0.01);
  REQUIRE(v.size() == 2);
  CHECK(v[0].passed);
  CHECK(v[0].margin == Approx(272.0 * 0.01).epsilon(1e-12));
  CHECK(v[1].rhs == Approx(272.0 * (0.125 * oracle::h1_zonal + 0.01)).epsilon(1e-12));
  CHECK(v[1].passed == (v[1].lhs <= v[1].rhs + 3.0 * v[1].ci));
  // scaling stress: u -> 10 u, rhs grows by 100 in its quadratic part
  const auto big = verify_subgaussian(empirical_log_mgf(s, scaled(zonal_function(), 10.0), 0.0, {1.0}, 272.0),
                                      100.0 * oracle::h1_zonal, 0.0);
  CHECK(big[0].rhs == Approx(272.0 * 50.0 * oracle::h1_zonal).epsilon(1e-12));
  CHECK(big[0].passed);
}

TEST_CASE("Chernoff conversion") {
  const double lambda = 40.0;
  CHECK(chernoff_convert(1.0, 1.0, lambda, 0.0) == Approx(2.0 * std::exp(-lambda / 2)).epsilon(1e-14));
  CHECK(chernoff_convert(1.0, 0.0, lambda, 0.1) == Approx(2.0 * std::exp(4.0)).epsilon(1e-14));
  CHECK(chernoff_convert(1.0, 0.0, lambda, 0.0) >= 2.0);
  for (double b : {0.1, 0.5, 1.0, 3.0}) {
    double prev = kInf;
    for (double d = 0.0; d <= 2.0; d += 0.1) {
      const double c = chernoff_convert(b, d, lambda, 0.01);
      CHECK(c <= prev);
      CHECK(c <= chernoff_convert(1.1 * b, d, lambda, 0.01));
      prev = c;
    }
  }
}

TEST_CASE("worst-case error on the sphere") {
  const WceReport one = wce(Configuration{{{0.0, 0.0}}}, 2.0);
  CHECK(one.wce == Approx(oracle::wce_single_point_s2).epsilon(1e-6));
  CHECK(one.tail_bound <= 1e-6 * one.wce * one.wce);
  const WceReport pair = wce(Configuration{{{1.0, 0.0}, {-1.0, 0.0}}}, 2.0);
  CHECK(pair.wce == Approx(oracle::wce_antipodal_pair_s2).epsilon(1e-6));
  CHECK_THROWS(wce(Configuration{{{0.0, 0.0}}}, 1.0));

  Configuration c = random_config(12, 6);
  const double w = wce(c, 2.5).wce;
  Configuration relabel = c;
  std::reverse(relabel.points.begin(), relabel.points.end());
  std::swap(relabel.points[2], relabel.points[7]);
  CHECK(wce(relabel, 2.5).wce == Approx(w).epsilon(1e-12));
  Configuration spun = c, moved = c;
  for (auto& p : spun.points) p *= std::polar(1.0, 0.7);
  for (auto& p : moved.points) p = mobius_rotation(p, {0.3, -0.4});
  CHECK(wce(spun, 2.5).wce == Approx(w).epsilon(1e-8));
  CHECK(wce(moved, 2.5).wce == Approx(w).epsilon(1e-8));
  // kernel route and explicit coefficients agree
  const HarmonicBasis basis(60);
  CHECK(wce_spectral(c, 2.5, basis).wce == Approx(w).epsilon(1e-4));
  CHECK(wce_spectral(Configuration{{{0.0, 0.0}}}, 2.0, HarmonicBasis(400)).wce == Approx(1.0).epsilon(2e-3));
}

TEST_CASE("spectral norm at s = 1 matches the Green-integral H^-1 distance") {
  const Measure a = mu0_measure(), b = dilate(mu0_measure(), 1.5);
  const double spectral = spectral_sobolev_distance(a, b, 1.0, 40);
  const double green = h_minus1_distance(a, b);
  CHECK(spectral == Approx(green).epsilon(1e-4));
  CHECK(spectral > 0.01);
}

TEST_CASE("mesoscopic statistics") {
  const Configuration c = random_config(30, 8);
  const TestFunction u = gaussian_bump({0.1, 0.0}, 0.4, 1.0);
  const Measure mu = uniform_disk();
  CHECK(mesoscopic_statistic(c, mu, u, {0.0, 0.0}, 1.0) ==
        Approx(linear_statistic(c, u) - equilibrium_mean(u, mu)).epsilon(1e-9));
  // bump far from the droplet and from every point
  Configuration inside;
  for (Point z : c.points)
    if (std::abs(z) < 1.5) inside.points.push_back(z);
  const TestFunction far = radial_bump({0.0, 0.0}, 0.1, 0.5, 1.0);
  CHECK(mesoscopic_statistic(inside, mu, far, {2.0, 0.0}, 0.1) == 0.0);
}

TEST_CASE("fluctuation variance") {
  const SampleSet s = exact_samples(Ensemble::ginibre_moduli, 100, 300, 4);
  const VarianceReport flat = fluctuation_variance(s, constant_function(2.0), 1.0);
  CHECK(flat.variance == Approx(0.0).scale(1.0).epsilon(1e-20));
  const TestFunction u = radial_bump({0.0, 0.0}, 0.3, 0.6, 1.0);
  const VarianceReport one = fluctuation_variance(s, u, 1.0);
  const VarianceReport two = fluctuation_variance(s, scaled(u, 2.0), 1.0);
  CHECK(std::sqrt(two.variance / one.variance) == Approx(2.0).epsilon(1e-9));
  CHECK(one.std_error > 0.0);
  CHECK(one.n_samples == 300);
}

TEST_CASE("goodness-of-fit helpers") {
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({0, 0, 0}, {1, 1, 1}) == 1.0);
  CHECK(ks_one_sample({0.5}, [](double x) { return x; }) == Approx(0.5));
  CHECK(kolmogorov_pvalue(0.0, 100) == Approx(1.0));
  // 1.358 / sqrt(n) is the 5% point
  CHECK(kolmogorov_pvalue(1.358 / 10.0, 100) == Approx(0.05).epsilon(0.02));
  Rng rng(1);
  std::vector<double> u(2000);
  for (double& x : u) x = rng.uniform();
  CHECK(kolmogorov_pvalue(ks_one_sample(u, [](double x) { return x; }), 2000) > 0.01);
  const ChiSquareResult fair = chi_square_test({25, 25, 25, 25}, {0.25, 0.25, 0.25, 0.25});
  CHECK(fair.statistic == 0.0);
  CHECK(fair.dof == 3);
  CHECK(fair.p_value == Approx(1.0));
  const ChiSquareResult skew = chi_square_test({90, 5, 3, 2}, {0.25, 0.25, 0.25, 0.25});
  CHECK(skew.p_value < 1e-6);
  const ChiSquareResult pooled = chi_square_test({50, 48, 1, 1}, {0.49, 0.49, 0.01, 0.01});
  CHECK(pooled.dof == 2);  // the two sparse cells form one pooled cell
}
