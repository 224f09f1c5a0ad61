#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"

#include "coulomb/brute_force.hpp"
#include "coulomb/determinantal.hpp"
#include "coulomb/energies.hpp"
#include "coulomb/quadrature.hpp"
#include "oracle_values.hpp"

using namespace coulomb;
using doctest::Approx;

namespace {

Potential fs_bump(double amp) { return plus(fs_potential_fn(), radial_bump({0.0, 0.0}, 0.5, 0.8, amp)); }

Eigen::MatrixXcd dense(const GramMatrix& g) {
  Eigen::MatrixXcd m(g.n, g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) m(i, j) = g.entry(i, j);
  return m;
}

double log_det(const Eigen::MatrixXcd& m) {
  Eigen::LLT<Eigen::MatrixXcd> llt(m);
  REQUIRE(llt.info() == Eigen::Success);
  double acc = 0.0;
  for (int i = 0; i < m.rows(); ++i) acc += 2.0 * std::log(llt.matrixL()(i, i).real());
  return acc;
}

}  // namespace

TEST_CASE("conventions") {
  CHECK(parse_convention("adjoint") == Convention::adjoint_Nplus1);
  CHECK(parse_convention("exterior_Nphi") == Convention::exterior_Nphi);
  CHECK(parse_convention("exterior_NplusP") == Convention::exterior_NplusP);
  CHECK_THROWS(parse_convention("bogus"));
  CHECK(weight_exponent(Convention::adjoint_Nplus1, 5, 1.0) == 6.0);
  CHECK(weight_exponent(Convention::exterior_Nphi, 5, 1.0) == 5.0);
  CHECK(weight_exponent(Convention::exterior_NplusP, 5, 0.5) == 8.0);
}

TEST_CASE("Fubini-Study moments") {
  CHECK(fs_moment(0, 2) == Approx(oracle::fs_moment_0_2).epsilon(1e-14));
  CHECK(fs_moment(1, 3) == Approx(oracle::fs_moment_1_3).epsilon(1e-14));
  CHECK(fs_moment(7, 20) == Approx(oracle::fs_moment_7_20).epsilon(1e-12));
  CHECK_THROWS(fs_moment(3, 4));
  CHECK_THROWS(fs_moment(-1, 4));
}

TEST_CASE("monomial Gram matrices") {
  const GramMatrix g = monomial_gram(fs_potential_fn(), 2, 3.0);
  CHECK(g.diagonal);
  CHECK(g.entry(0, 0).real() == Approx(kPi / 2).epsilon(1e-12));
  CHECK(g.entry(1, 1).real() == Approx(kPi / 2).epsilon(1e-12));
  CHECK(std::abs(g.entry(0, 1)) == 0.0);
  // weight exp(-2|z|^2)
  CHECK(monomial_gram(quadratic(1.0), 1, 2.0).entry(0, 0).real() == Approx(oracle::gaussian_gram_entry).epsilon(1e-12));
  // a non-radial potential gives a full Hermitian matrix
  const Potential off = plus(quadratic(1.0), radial_bump({0.4, 0.1}, 0.1, 0.6, 0.5));
  const GramMatrix h = monomial_gram(off, 5, 6.0);
  CHECK_FALSE(h.diagonal);
  double offmax = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      CHECK(std::abs(h.entry(i, j) - std::conj(h.entry(j, i))) <= 1e-12 * std::abs(h.entry(i, i)));
      if (i != j) offmax = std::max(offmax, std::abs(h.entry(i, j)));
    }
  CHECK(offmax > 1e-6);
  // the 2D path on a radial weight reproduces the diagonal
  const GramMatrix shifted_center = monomial_gram(fs_affine(1.0, Point(0.0, 0.0)), 4, 5.0);
  CHECK(shifted_center.log_det() == Approx(monomial_gram(fs_potential_fn(), 4, 5.0).log_det()).epsilon(1e-12));
}

TEST_CASE("partition functions at beta = 1") {
  CHECK(log_partition_beta1(fs_potential_fn(), 1).log_z == Approx(oracle::log_z_fs_1).epsilon(1e-13));
  const PartitionValue two = log_partition_beta1(fs_potential_fn(), 2);
  CHECK(two.log_z == Approx(oracle::log_z_fs_2_closed).epsilon(1e-13));
  CHECK(two.method == PartitionMethod::gram);
  CHECK(two.error_bar == 0.0);
  for (int n : {10, 50, 400}) {
    const double want = n == 10 ? oracle::log_z_fs_10 : n == 50 ? oracle::log_z_fs_50 : oracle::log_z_fs_400;
    CHECK(log_partition_beta1(fs_potential_fn(), n).log_z == Approx(want).epsilon(1e-12));
    CHECK(log_z_fs(n) == Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("partition asymptotics of the spherical ensemble") {
  auto r = [](int n) { return log_z_fs(n) + 0.5 * n * n - 0.5 * n * std::log(n); };
  const double ref = std::abs(r(50)) / 50.0;
  for (int n : {10, 25, 50, 100, 200, 400}) CHECK(std::abs(r(n)) / n <= 2.0 * ref);
}

TEST_CASE("determinant scaling under a triangular change of basis") {
  const Potential phi = plus(quadratic(1.0), radial_bump({0.3, -0.2}, 0.1, 0.5, 0.4));
  const Potential phi_u = plus(phi, gaussian_bump({-0.2, 0.1}, 0.4, 0.3));
  const int n = 6;
  const Eigen::MatrixXcd a = dense(monomial_gram(phi, n, n + 1.0));
  const Eigen::MatrixXcd b = dense(monomial_gram(phi_u, n, n + 1.0));
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) t(i, j) = {nd(gen), nd(gen)};
  for (int i = 0; i < n; ++i) t(i, i) += 3.0;
  const double base = log_det(b) - log_det(a);
  const double changed = log_det(t * b * t.adjoint()) - log_det(t * a * t.adjoint());
  CHECK(changed == Approx(base).epsilon(1e-10));
  CHECK(monomial_gram(phi, n, n + 1.0).log_det() == Approx(log_det(a)).epsilon(1e-10));
}

TEST_CASE("orthonormal basis integrates the determinant to N!") {
  // brute-force Z divided by the Gram determinant is exactly N!
  const Potential phi = fs_bump(0.3);
  const PartitionValue brute = brute_force_log_z(phi, 2, 1.0, Convention::adjoint_Nplus1);
  const double gram = monomial_gram(phi, 2, 3.0).log_det();
  CHECK(brute.log_z - gram == Approx(std::log(2.0)).epsilon(1e-4));
}

TEST_CASE("monotonicity of log Z in the potential") {
  const std::vector<std::pair<Potential, Potential>> pairs = {
      {fs_potential_fn(), fs_bump(0.3)},
      {quadratic(1.0), quadratic(1.5)},
      {quadratic(1.0), plus(quadratic(1.0), radial_bump({0.5, 0.0}, 0.1, 0.4, 0.5))},
      {fs_bump(0.1), fs_bump(0.6)},
      {quadratic(2.0), shifted(quadratic(2.0), 0.1)}};
  for (const auto& [lo, hi] : pairs)
    for (int n : {3, 8}) CHECK(log_partition_beta1(lo, n).log_z >= log_partition_beta1(hi, n).log_z);
}

TEST_CASE("error sequence") {
  for (int n : {1, 4, 16, 64}) {
    const ErrorSequenceReport r = error_sequence(fs_potential_fn(), n, 1.0,
                                                 log_partition_beta1(fs_potential_fn(), n, Convention::exterior_NplusP), 0.5);
    CHECK(std::abs(r.total) <= 1e-10);
    CHECK(r.total == Approx(r.specific - r.universal).epsilon(1e-15));
  }
  // affine images of psi0 also have zero error
  const Potential moved = fs_affine(2.0, Point(0.3, -0.2));
  const double F = free_energy(moved);
  CHECK(F == Approx(0.5 + std::log(2.0)).epsilon(1e-9));
  const ErrorSequenceReport m = error_sequence(moved, 8, 1.0, log_partition_beta1(moved, 8, Convention::exterior_NplusP), F);
  CHECK(std::abs(m.total) <= 1e-6);
  // positive and below the a-priori bound for a bumped potential
  const Potential phi = fs_bump(0.3);
  const double Fb = free_energy(phi);
  const ErrorBound bound = error_bound(phi);
  CHECK(bound.c_universal == Approx(oracle::c_universal).epsilon(1e-9));
  for (int n : {8, 16, 32, 64}) {
    const ErrorSequenceReport r = error_sequence(phi, n, 1.0, log_partition_beta1(phi, n, Convention::exterior_NplusP), Fb);
    const double want = n == 8 ? oracle::eps_fs_bump_8 : n == 16 ? oracle::eps_fs_bump_16 : n == 32 ? oracle::eps_fs_bump_32
                                                                                              : oracle::eps_fs_bump_64;
    CHECK(r.total == Approx(want).epsilon(1e-5));
    CHECK(r.total >= 0.0);
    CHECK(r.total <= bound.bound(n));
  }
}

TEST_CASE("Holder reduction and brute force at small N") {
  CHECK(holder_rhs(fs_potential_fn(), 2, 1.0) == Approx(oracle::log_z_fs_2).epsilon(1e-13));
  CHECK(holder_rhs(fs_potential_fn(), 2, 0.5) == Approx(oracle::holder_fs_2_half).epsilon(1e-12));
  const PartitionValue one = brute_force_log_z(fs_potential_fn(), 1, 1.0, Convention::adjoint_Nplus1);
  CHECK(one.log_z == Approx(std::log(kPi)).epsilon(1e-6));
  const PartitionValue two = brute_force_log_z(fs_potential_fn(), 2, 1.0, Convention::adjoint_Nplus1);
  CHECK(two.log_z == Approx(oracle::log_z_fs_2).epsilon(1e-4));
  CHECK(two.method == PartitionMethod::brute_quadrature);
  const PartitionValue half = brute_force_log_z(fs_potential_fn(), 2, 0.5, Convention::exterior_NplusP);
  CHECK(half.log_z == Approx(oracle::log_z_half_fs_2).epsilon(1e-6));
  CHECK(2.0 * half.log_z <= holder_rhs(fs_potential_fn(), 2, 0.5) - 10.0 * half.error_bar);
  // V = N |z|^2 at beta = 1/2 is finite and stable under refinement
  const PartitionValue q1 = brute_force_log_z(quadratic(1.0), 2, 0.5, Convention::exterior_Nphi);
  const PartitionValue q2 = brute_force_log_z(quadratic(1.0), 2, 0.5, Convention::exterior_Nphi, 48);
  CHECK(std::isfinite(q1.log_z));
  CHECK(q1.log_z == Approx(q2.log_z).epsilon(1e-3));
  CHECK_THROWS(brute_force_log_z(fs_potential_fn(), 4, 1.0, Convention::adjoint_Nplus1));
}

TEST_CASE("Gibbs variational lower bound") {
  const Measure nu = mu0_measure();
  const double g1 = gibbs_lower_bound(fs_potential_fn(), 2, 1.0, Convention::exterior_NplusP, nu);
  const double gh = gibbs_lower_bound(fs_potential_fn(), 2, 0.5, Convention::exterior_NplusP, nu);
  CHECK(g1 == Approx(oracle::gibbs_fs_2_beta1).epsilon(1e-3));
  CHECK(gh == Approx(oracle::gibbs_fs_2_beta_half).epsilon(1e-3));
  CHECK(oracle::log_z_fs_2 >= g1);
  CHECK(2.0 * oracle::log_z_half_fs_2 >= gh);
}

TEST_CASE("mean energy defect converges with the half log N profile") {
  double prev = -kInf, prev_gap = kInf;
  for (int n : {10, 100, 1000, 10000}) {
    const double v = n * mean_energy_defect(n) + 0.5 * std::log(n);
    CHECK(v > prev);
    if (std::isfinite(prev)) {
      CHECK(v - prev < prev_gap);
      prev_gap = v - prev;
    }
    prev = v;
  }
  CHECK(prev == Approx(0.4183).epsilon(1e-3));
}

TEST_CASE("Bergman densities") {
  const Measure b = bergman_density(fs_potential_fn(), 8, Convention::adjoint_Nplus1);
  for (Point z : {Point(0.0, 0.0), Point(0.5, 0.5), Point(-2.0, 1.0), Point(10.0, 0.0)})
    CHECK(b.density(z) == Approx(mu0_density(z)).epsilon(1e-10));
  CHECK(b.total_mass() == Approx(1.0).epsilon(1e-8));
  CHECK(h_minus1_distance(b, mu0_measure()) <= 1e-6);
  const Measure g = bergman_density(quadratic(1.0), 64, Convention::exterior_Nphi);
  for (double r : {0.0, 0.3, 0.5, 0.7}) CHECK(std::abs(g.density(Point(r, 0.0)) - 1.0 / kPi) <= 0.05);
  CHECK(g.total_mass() == Approx(1.0).epsilon(1e-8));
  // a non-radial weight still integrates to one
  const Measure off = bergman_density(plus(quadratic(1.0), radial_bump({0.4, 0.1}, 0.1, 0.6, 0.5)), 6,
                                      Convention::exterior_Nphi);
  CHECK(integrate(off, [](Point) { return 1.0; }) == Approx(1.0).epsilon(1e-6));
  CHECK(h_minus1_distance(mu0_measure(), mu0_measure()) == Approx(0.0).epsilon(1e-12));
}
