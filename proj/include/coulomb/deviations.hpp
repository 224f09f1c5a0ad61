#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "coulomb/determinantal.hpp"
#include "coulomb/envelope.hpp"
#include "coulomb/geometry.hpp"
#include "coulomb/measure.hpp"
#include "coulomb/sampling.hpp"

namespace coulomb {

/// (1/N) sum u(x_i).
double linear_statistic(const Configuration& config, const TestFunction& u);

/// int u d mu_phi.
double equilibrium_mean(const TestFunction& u, const EquilibriumResult& eq);
double equilibrium_mean(const TestFunction& u, const Measure& mu);

struct MGFReport {
  std::vector<double> t_grid;
  std::vector<double> log_mgf;
  std::vector<double> ci_half_width;  // bootstrap, 95%
  std::vector<double> ess;            // effective sample size of the tilted weights
  std::vector<bool> trusted;          // ess > 30
  std::vector<bool> heavy_tail;       // top 1% of samples carry > 50% of the weight
  int n_samples = 0;
  double speed = 1.0;
};

/// log mean exp(speed t (U_N - u_bar)) over the sample set, per t.
MGFReport empirical_log_mgf(const SampleSet& samples, const TestFunction& u, double u_bar,
                            const std::vector<double>& t_grid, double speed, int bootstrap = 400,
                            std::uint64_t seed = 1);

/// Exact beta = 1 log E exp(speed t (U_N - u_bar)) as a ratio of Gram determinants:
/// log Z[V - s N u] - log Z[V] - s N u_bar with s = speed t / N.
double exact_log_mgf_beta1(const Potential& phi, const TestFunction& u, int n, Convention convention,
                           double u_bar, double t, double speed);

struct SubGaussianVerdict {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;        // rhs - lhs
  double epsilon_term = 0.0;  // speed * eps
  double t = 0.0;
  double ci = 0.0;
  bool trusted = true;
  bool passed = false;  // lhs <= rhs + 3 ci
};

/// rhs = speed (t^2/2 ||u||^2_{H^1} + eps); one verdict per t of the report.
std::vector<SubGaussianVerdict> verify_subgaussian(const MGFReport& report, double h1_norm_sq_u, double eps);
std::vector<SubGaussianVerdict> verify_subgaussian(const MGFReport& report, const TestFunction& u,
                                                   const ErrorSequenceReport& eps);

/// Two-sided deviation bound 2 exp(-speed (delta^2 / (2 B) - eps)).
double chernoff_convert(double variance_proxy, double delta, double speed, double eps);

struct WceReport {
  int n = 0;
  double s = 0.0;
  int l_max = 0;
  double wce = 0.0;
  double tail_bound = 0.0;  // bound on the omitted part of wce^2
};

/// ||delta_N - mu0||_{H^{-s}} through the zonal kernel
/// K_s(t) = sum_{l >= 1} (2l+1) (l(l+1))^{-s} P_l(t), tabulated in the angle up to
/// l_max and summed exactly at t = +-1. l_max doubles until the tail bound is
/// below 1e-6 wce^2.
WceReport wce(const Configuration& config, double s);
/// Same norm from explicit harmonic coefficients a_lm = (1/N) sum Y_lm(x_i) up to l_max.
WceReport wce_spectral(const Configuration& config, double s, const HarmonicBasis& basis);

/// ||mu1 - mu2||_{H^{-s}} from harmonic coefficients up to l_max, measures with densities.
double spectral_sobolev_distance(const Measure& mu1, const Measure& mu2, double s, int l_max);

/// l^{-2} <(F)_*(delta_N - mu), u>, F(z) = z0 + (z - z0) / l.
double mesoscopic_statistic(const Configuration& config, const Measure& mu, const TestFunction& u, Point z0,
                            double scale);
double mesoscopic_statistic(const Configuration& config, const EquilibriumResult& eq, const TestFunction& u,
                            Point z0, double scale);

struct VarianceReport {
  double variance = 0.0;  // of N (U_N - mean)
  double std_error = 0.0;  // jackknife
  double target = 0.0;
  double relative_error = 0.0;
  int n_samples = 0;
};
VarianceReport fluctuation_variance(const SampleSet& samples, const TestFunction& u, double sigma_sq_target);

/// sup |F1 - F2| of the empirical distributions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// sup |F_emp - F|.
double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);
/// Asymptotic Kolmogorov tail P(sqrt(n_eff) D > x).
double kolmogorov_pvalue(double d, double n_eff);
/// Pearson statistic and p-value; cells with expected count below min_expected are pooled.
struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
};
ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& probabilities,
                                double min_expected = 5.0);

}  // namespace coulomb
