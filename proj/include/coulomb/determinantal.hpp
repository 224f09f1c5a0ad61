#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coulomb/measure.hpp"
#include "coulomb/potentials.hpp"

namespace coulomb {

/// Which multiple of phi enters the Hamiltonian as V.
enum class Convention { adjoint_Nplus1, exterior_Nphi, exterior_NplusP };
enum class PartitionMethod { gram, brute_quadrature, thermo_integration };

const char* to_string(Convention c);
const char* to_string(PartitionMethod m);
Convention parse_convention(const std::string& s);

/// V = m phi with m = N+1, N or N+p.
double weight_exponent(Convention c, int n, double beta);

/// int |z|^{2j} (1+|z|^2)^{-m} d lambda = pi j! (m-2-j)! / (m-1)!.
double log_fs_moment(int j, int m);
double fs_moment(int j, int m);

/// Hermitian matrix <(z-c)^i, (z-c)^j> in L^2(e^{-m phi} d lambda), stored as
/// G_ij = exp(s_i + s_j) M_ij with unit diagonal M. The basis is centred at
/// the radial centre of phi when there is one (a unit-triangular change of
/// the monomial basis, so determinants agree).
struct GramMatrix {
  int n = 0;
  Point center{0.0, 0.0};
  bool diagonal = false;
  Eigen::MatrixXcd normalized;
  std::vector<double> log_scale;

  std::complex<double> entry(int i, int j) const;
  /// log det G via Cholesky; throws std::domain_error if not positive definite.
  double log_det() const;
};

GramMatrix monomial_gram(const Potential& phi, int n, double m_exponent);

struct PartitionValue {
  double log_z = 0.0;
  int n = 0;
  double beta = 1.0;
  Convention convention = Convention::adjoint_Nplus1;
  PartitionMethod method = PartitionMethod::gram;
  double error_bar = 0.0;
};

/// log Z_{N,1}[V] = log N! + log det Gram(e^{-V}).
PartitionValue log_partition_beta1(const Potential& phi, int n,
                                   Convention convention = Convention::adjoint_Nplus1);
/// Same, for V = m phi with an arbitrary real m.
double log_partition_weight(const Potential& phi, int n, double m_exponent);

/// Closed form log Z_{N,1}[(N+1) psi0] = log N! + sum_{j<N} log fs_moment(j, N+1).
double log_z_fs(int n);

/// log int e^{-m phi} d lambda.
double log_weight_integral(const Potential& phi, double m);

struct ErrorSequenceReport {
  int n = 0;
  double beta = 1.0;
  double specific = 0.0;
  double universal = 0.0;
  double total = 0.0;
};

/// Error sequence of (phi, N, beta) from log Z_{N,beta}[(N+p) phi] and F(phi).
ErrorSequenceReport error_sequence(const Potential& phi, int n, double beta, const PartitionValue& z_value,
                                   double free_energy_phi);

/// log Z_{N,1}[(N+1) Phi] + (1/beta - 1) N log int e^{-2 Phi}: an upper bound for
/// (1/beta) log Z_{N,beta}[(N+p) Phi].
double holder_rhs(const Potential& phi_plus_u, int n, double beta);

/// Explicit a-priori bound on the beta = 1 error sequence:
/// eps_N <= C_phi / N + log N / (2N), with
/// C_phi = max(0, log sup(dd^c phi e^{2 phi}) - 1 - 2 inf(phi - psi0)) + c_universal.
struct ErrorBound {
  double sup_curvature_ratio = 0.0;  // sup over the plane of (lap phi / 4pi) e^{2 phi}
  double inf_phi_minus_psi0 = 0.0;
  double c_universal = 0.0;
  double c_phi = 0.0;
  double bound(int n) const;
};
ErrorBound error_bound(const Potential& phi);

/// sup_N N (log Z_{N,1}[(N+1) psi0] / (N(N+1)) + 1/2 - log N / (2N)) over N <= n_max.
double universal_error_constant(int n_max = 4096);

/// Mean-energy defect q_N = (N(N-1))^{-1} int H_sphere nu^N - E_{psi0}(nu) for the
/// sphere Hamiltonian normalised by int e^{-H} mu0^N = N!. Independent of nu.
double mean_energy_defect(int n);

/// Normalised Bergman density (1/N) sum |P_i|^2 e^{-V} for the Gram-orthonormal
/// polynomials of e^{-V}, V per convention (beta = 1).
Measure bergman_density(const Potential& phi, int n, Convention convention);

/// Circular law: uniform probability measure on the unit disk.
Measure circular_law();

}  // namespace coulomb
