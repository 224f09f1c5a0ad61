#include "coulomb/deviations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "coulomb/parallel.hpp"

namespace coulomb {

double linear_statistic(const Configuration& config, const TestFunction& u) {
  if (config.points.empty()) throw std::invalid_argument("linear_statistic: empty configuration");
  double acc = 0.0;
  for (const auto& z : config.points) acc += u(z);
  return acc / static_cast<double>(config.points.size());
}

double equilibrium_mean(const TestFunction& u, const Measure& mu) {
  return integrate(mu, [&](Point z) { return u(z); });
}

double equilibrium_mean(const TestFunction& u, const EquilibriumResult& eq) {
  return equilibrium_mean(u, eq.measure());
}

namespace {

double log_mean_exp(const std::vector<double>& x) {
  const double top = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - top);
  return top + std::log(acc / static_cast<double>(x.size()));
}

}  // namespace

MGFReport empirical_log_mgf(const SampleSet& samples, const TestFunction& u, double u_bar,
                            const std::vector<double>& t_grid, double speed, int bootstrap, std::uint64_t seed) {
  const std::size_t n = samples.configs.size();
  const double n_eff = static_cast<double>(n) / std::max(1.0, samples.autocorr_time_estimate);
  if (n_eff < 200.0) throw std::invalid_argument("empirical_log_mgf: fewer than 200 effectively independent samples");
  std::vector<double> dev(n);
  for (std::size_t r = 0; r < n; ++r) dev[r] = linear_statistic(samples.configs[r], u) - u_bar;
  MGFReport rep;
  rep.t_grid = t_grid;
  rep.n_samples = static_cast<int>(n);
  rep.speed = speed;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (t == 0.0) {
      rep.log_mgf.push_back(0.0);
      rep.ci_half_width.push_back(0.0);
      rep.ess.push_back(static_cast<double>(n));
      rep.trusted.push_back(true);
      rep.heavy_tail.push_back(false);
      continue;
    }
    std::vector<double> x(n);
    for (std::size_t r = 0; r < n; ++r) x[r] = speed * t * dev[r];
    rep.log_mgf.push_back(log_mean_exp(x));
    const double top = *std::max_element(x.begin(), x.end());
    std::vector<double> w(n);
    double sw = 0.0, sw2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      w[r] = std::exp(x[r] - top);
      sw += w[r];
      sw2 += w[r] * w[r];
    }
    const double ess = sw * sw / sw2;
    rep.ess.push_back(ess);
    rep.trusted.push_back(ess > 30.0);
    std::sort(w.begin(), w.end(), std::greater<>());
    const std::size_t top1 = std::max<std::size_t>(1, (n + 99) / 100);
    double head = 0.0;
    for (std::size_t r = 0; r < top1; ++r) head += w[r];
    rep.heavy_tail.push_back(head > 0.5 * sw);
    Rng rng(seed, k);
    std::vector<double> boot(static_cast<std::size_t>(bootstrap)), xb(n);
    for (int b = 0; b < bootstrap; ++b) {
      for (std::size_t r = 0; r < n; ++r) xb[r] = x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))];
      boot[static_cast<std::size_t>(b)] = log_mean_exp(xb);
    }
    std::sort(boot.begin(), boot.end());
    const auto q = [&](double p) { return boot[static_cast<std::size_t>(p * (bootstrap - 1))]; };
    rep.ci_half_width.push_back(0.5 * (q(0.975) - q(0.025)));
  }
  return rep;
}

double exact_log_mgf_beta1(const Potential& phi, const TestFunction& u, int n, Convention convention,
                           double u_bar, double t, double speed) {
  const double m = weight_exponent(convention, n, 1.0);
  const double a = speed * t / n;  // E exp(a sum u) = Z[V - a u] / Z[V]
  const Potential tilted = plus(phi, scaled(u, -a / m));
  return log_partition_weight(tilted, n, m) - log_partition_weight(phi, n, m) - speed * t * u_bar;
}

std::vector<SubGaussianVerdict> verify_subgaussian(const MGFReport& report, double h1_norm_sq_u, double eps) {
  std::vector<SubGaussianVerdict> out;
  for (std::size_t k = 0; k < report.t_grid.size(); ++k) {
    SubGaussianVerdict v;
    v.t = report.t_grid[k];
    v.lhs = report.log_mgf[k];
    v.epsilon_term = report.speed * eps;
    v.rhs = report.speed * (0.5 * v.t * v.t * h1_norm_sq_u + eps);
    v.margin = v.rhs - v.lhs;
    v.ci = report.ci_half_width[k];
    v.trusted = report.trusted[k];
    v.passed = v.lhs <= v.rhs + 3.0 * v.ci;
    out.push_back(v);
  }
  return out;
}

std::vector<SubGaussianVerdict> verify_subgaussian(const MGFReport& report, const TestFunction& u,
                                                   const ErrorSequenceReport& eps) {
  return verify_subgaussian(report, h1_norm_sq(u), eps.total);
}

double chernoff_convert(double variance_proxy, double delta, double speed, double eps) {
  if (!(variance_proxy > 0.0)) throw std::invalid_argument("chernoff_convert: variance proxy must be positive");
  return 2.0 * std::exp(-speed * (delta * delta / (2.0 * variance_proxy) - eps));
}

// ---- Sobolev discrepancy ---------------------------------------------------

namespace {

constexpr int kAngleCells = 32768;

double kernel_coefficient(int l, double s) { return (2.0 * l + 1.0) * std::pow(l * (l + 1.0), -s); }

// sum_{l >= 1} (+-1)^l (2l+1) (l(l+1))^{-s}, Euler-Maclaurin tail for the positive series
double kernel_at_pole(double s, bool antipode) {
  constexpr int M = 100000;
  double acc = 0.0;
  for (int l = M; l >= 1; --l) acc += ((antipode && (l % 2)) ? -1.0 : 1.0) * kernel_coefficient(l, s);
  if (antipode) return acc + ((M % 2) ? 0.5 : -0.5) * kernel_coefficient(M + 1, s);
  return acc + std::pow(M * (M + 1.0), 1.0 - s) / (s - 1.0) - 0.5 * kernel_coefficient(M, s);
}

struct KernelTable {
  int l_max = 0;
  std::vector<double> values;  // on theta_k = pi k / kAngleCells
  double at_pole = 0.0, at_antipode = 0.0, tail = 0.0;

  double operator()(double t) const {
    if (t >= 1.0 - 1e-15) return at_pole;
    if (t <= -1.0 + 1e-15) return at_antipode;
    const double x = std::acos(t) / kPi * kAngleCells;
    const int i = std::clamp(static_cast<int>(x), 0, kAngleCells - 1);
    const double f = x - i;
    // Catmull-Rom through i-1..i+2, even reflection at both ends
    auto v = [&](int j) {
      if (j < 0) j = -j;
      if (j > kAngleCells) j = 2 * kAngleCells - j;
      return values[static_cast<std::size_t>(j)];
    };
    const double a = v(i - 1), b = v(i), c = v(i + 1), d = v(i + 2);
    return b + 0.5 * f * (c - a + f * (2.0 * a - 5.0 * b + 4.0 * c - d + f * (3.0 * (b - c) + d - a)));
  }
};

const KernelTable& kernel_table(double s, int l_max) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::unique_ptr<KernelTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{s, l_max}];
  if (slot) return *slot;
  auto tab = std::make_unique<KernelTable>();
  tab->l_max = l_max;
  tab->values.assign(kAngleCells + 1, 0.0);
  std::vector<double> coef(static_cast<std::size_t>(l_max + 1), 0.0);
  double partial = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    coef[static_cast<std::size_t>(l)] = kernel_coefficient(l, s);
    partial += coef[static_cast<std::size_t>(l)];
  }
  parallel_for(static_cast<std::size_t>(kAngleCells + 1), [&](std::size_t k) {
    const double t = std::cos(kPi * static_cast<double>(k) / kAngleCells);
    double p0 = 1.0, p1 = t, acc = coef[1] * t;
    for (int l = 2; l <= l_max; ++l) {
      const double p2 = ((2.0 * l - 1.0) * t * p1 - (l - 1.0) * p0) / l;
      acc += coef[static_cast<std::size_t>(l)] * p2;
      p0 = p1;
      p1 = p2;
    }
    tab->values[k] = acc;
  });
  tab->at_pole = kernel_at_pole(s, false);
  tab->at_antipode = kernel_at_pole(s, true);
  tab->tail = std::max(0.0, tab->at_pole - partial);
  slot = std::move(tab);
  return *slot;
}

}  // namespace

WceReport wce(const Configuration& config, double s) {
  if (!(s > 1.0)) throw std::invalid_argument("wce: need s > 1");
  const auto& z = config.points;
  const std::size_t N = z.size();
  if (N == 0) throw std::invalid_argument("wce: empty configuration");
  std::vector<std::array<double, 3>> x(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double q = 1.0 / (1.0 + std::norm(z[i]));  // 0 at infinity
    x[i] = {2.0 * z[i].real() * q, 2.0 * z[i].imag() * q, 2.0 * q - 1.0};
  }
  WceReport rep;
  rep.n = static_cast<int>(N);
  rep.s = s;
  for (int L = 64;; L *= 2) {
    const KernelTable& K = kernel_table(s, L);
    double acc = static_cast<double>(N) * K.at_pole;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        acc += 2.0 * K(x[i][0] * x[j][0] + x[i][1] * x[j][1] + x[i][2] * x[j][2]);
    const double w2 = std::max(0.0, acc / static_cast<double>(N * N));
    rep.l_max = L;
    rep.wce = std::sqrt(w2);
    rep.tail_bound = K.tail * static_cast<double>(N - 1) / static_cast<double>(N);
    if (rep.tail_bound <= 1e-6 * w2 || L >= 16384) break;
  }
  return rep;
}

WceReport wce_spectral(const Configuration& config, double s, const HarmonicBasis& basis) {
  if (!(s > 1.0)) throw std::invalid_argument("wce_spectral: need s > 1");
  const std::size_t N = config.points.size();
  std::vector<double> a(basis.size(), 0.0), y(basis.size());
  for (const auto& z : config.points) {
    basis.eval_all(z, y);
    for (std::size_t k = 0; k < y.size(); ++k) a[k] += y[k] / static_cast<double>(N);
  }
  double w2 = 0.0, partial = 0.0;
  for (int l = 1; l <= basis.l_max(); ++l) {
    double sum = 0.0;
    for (int m = -l; m <= l; ++m) sum += a[HarmonicBasis::index(l, m)] * a[HarmonicBasis::index(l, m)];
    w2 += std::pow(HarmonicBasis::eigenvalue(l), -s) * sum;
    partial += kernel_coefficient(l, s);
  }
  WceReport rep;
  rep.n = static_cast<int>(N);
  rep.s = s;
  rep.l_max = basis.l_max();
  rep.wce = std::sqrt(w2);
  rep.tail_bound = std::max(0.0, kernel_at_pole(s, false) - partial);
  return rep;
}

double spectral_sobolev_distance(const Measure& mu1, const Measure& mu2, double s, int l_max) {
  const HarmonicBasis basis(l_max);
  std::vector<double> a(basis.size(), 0.0), y(basis.size());
  auto accumulate = [&](const Measure& mu, double sign) {
    for (const auto& at : mu.atoms) {
      basis.eval_all(at.location, y);
      for (std::size_t k = 0; k < y.size(); ++k) a[k] += sign * at.mass * y[k];
    }
    if (mu.grid && !mu.density) {
      const GridFunction& g = *mu.grid;
      const double cell = g.grid->h * g.grid->h;
      for (std::size_t k = 0; k < g.grid->size(); ++k) {
        if (!g.grid->interior(k) || g[k] == 0.0) continue;
        basis.eval_all(g.grid->node(k), y);
        for (std::size_t q = 0; q < y.size(); ++q) a[q] += sign * g[k] * cell * y[q];
      }
      return;
    }
    if (!mu.density) throw std::invalid_argument("spectral_sobolev_distance: measure needs a density");
    const Quadrature& quad = reference_quadrature();
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
      const double d = mu.density(quad.nodes[k]);
      if (d == 0.0) continue;
      basis.eval_all(quad.nodes[k], y);
      for (std::size_t q = 0; q < y.size(); ++q) a[q] += sign * quad.weights[k] * d * y[q];
    }
  };
  accumulate(mu1, 1.0);
  accumulate(mu2, -1.0);
  double w2 = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    double sum = 0.0;
    for (int m = -l; m <= l; ++m) sum += a[HarmonicBasis::index(l, m)] * a[HarmonicBasis::index(l, m)];
    w2 += std::pow(HarmonicBasis::eigenvalue(l), -s) * sum;
  }
  return std::sqrt(w2);
}

// ---- mesoscopic and CLT-scale statistics -----------------------------------

double mesoscopic_statistic(const Configuration& config, const Measure& mu, const TestFunction& u, Point z0,
                            double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("mesoscopic_statistic: scale must lie in (0, 1]");
  auto blown = [&](Point z) { return u(z0 + (z - z0) / scale); };
  double emp = 0.0;
  for (const auto& z : config.points) emp += blown(z);
  emp /= static_cast<double>(config.points.size());
  return (emp - integrate(mu, blown)) / (scale * scale);
}

double mesoscopic_statistic(const Configuration& config, const EquilibriumResult& eq, const TestFunction& u,
                            Point z0, double scale) {
  return mesoscopic_statistic(config, eq.measure(), u, z0, scale);
}

VarianceReport fluctuation_variance(const SampleSet& samples, const TestFunction& u, double sigma_sq_target) {
  const std::size_t n = samples.configs.size();
  if (n < 3) throw std::invalid_argument("fluctuation_variance: need at least 3 samples");
  std::vector<double> x(n);
  for (std::size_t r = 0; r < n; ++r)
    x[r] = static_cast<double>(samples.configs[r].points.size()) * linear_statistic(samples.configs[r], u);
  const double nn = static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / nn;
  double s2 = 0.0;
  for (double v : x) s2 += (v - mean) * (v - mean);
  VarianceReport rep;
  rep.n_samples = static_cast<int>(n);
  rep.variance = s2 / (nn - 1.0);
  rep.target = sigma_sq_target;
  // leave-one-out variances from running sums
  const double S1 = mean * nn;
  double S2 = 0.0;
  for (double v : x) S2 += v * v;
  std::vector<double> loo(n);
  double loo_mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double s1 = S1 - x[r], q = S2 - x[r] * x[r];
    loo[r] = (q - s1 * s1 / (nn - 1.0)) / (nn - 2.0);
    loo_mean += loo[r];
  }
  loo_mean /= nn;
  double jk = 0.0;
  for (double v : loo) jk += (v - loo_mean) * (v - loo_mean);
  rep.std_error = std::sqrt((nn - 1.0) / nn * jk);
  rep.relative_error = sigma_sq_target != 0.0 ? (rep.variance - sigma_sq_target) / sigma_sq_target : rep.variance;
  return rep;
}

// ---- goodness of fit ----------------------------------------------------------

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double kolmogorov_pvalue(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  const double lam = (rn + 0.12 + 0.11 / rn) * d;
  if (lam < 0.2) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += ((k % 2) ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(q, 0.0, 1.0);
}

ChiSquareResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& probabilities,
                                double min_expected) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("chi_square_test: size mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double pooled_o = 0.0, pooled_e = 0.0;
  ChiSquareResult r;
  int cells = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = total * probabilities[k];
    if (e < min_expected) {
      pooled_o += observed[k];
      pooled_e += e;
      continue;
    }
    r.statistic += (observed[k] - e) * (observed[k] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    r.statistic += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  r.dof = cells - 1;
  if (r.dof < 1) throw std::invalid_argument("chi_square_test: fewer than two usable cells");
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

}  // namespace coulomb
