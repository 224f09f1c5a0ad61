#include "coulomb/determinantal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coulomb/quadrature.hpp"

namespace coulomb {

const char* to_string(Convention c) {
  switch (c) {
    case Convention::adjoint_Nplus1: return "adjoint_Nplus1";
    case Convention::exterior_Nphi: return "exterior_Nphi";
    case Convention::exterior_NplusP: return "exterior_NplusP";
  }
  return "?";
}

const char* to_string(PartitionMethod m) {
  switch (m) {
    case PartitionMethod::gram: return "gram";
    case PartitionMethod::brute_quadrature: return "brute_quadrature";
    case PartitionMethod::thermo_integration: return "thermo_integration";
  }
  return "?";
}

Convention parse_convention(const std::string& s) {
  if (s == "adjoint" || s == "adjoint_Nplus1") return Convention::adjoint_Nplus1;
  if (s == "exterior_Nphi" || s == "Nphi") return Convention::exterior_Nphi;
  if (s == "exterior_NplusP" || s == "NplusP") return Convention::exterior_NplusP;
  throw std::invalid_argument("unknown convention: " + s);
}

double weight_exponent(Convention c, int n, double beta) {
  switch (c) {
    case Convention::adjoint_Nplus1: return n + 1.0;
    case Convention::exterior_Nphi: return n;
    case Convention::exterior_NplusP: return n + p_of_beta(beta);
  }
  return n;
}

double log_fs_moment(int j, int m) {
  if (j < 0 || j > m - 2) throw std::out_of_range("fs_moment: need 0 <= j <= m - 2");
  return std::log(kPi) + std::lgamma(j + 1.0) + std::lgamma(m - 1.0 - j) - std::lgamma(static_cast<double>(m));
}

double fs_moment(int j, int m) { return std::exp(log_fs_moment(j, m)); }

namespace {

// log int exp(g(s)) ds over the real line for a peaked g; breaks are kinks of g.
double log_integral_peaked(const std::function<double(double)>& g, const std::vector<double>& breaks) {
  constexpr double kS = 80.0, kScan = 0.05;
  double smax = -kS, gmax = -kInf;
  for (double s = -kS; s <= kS; s += kScan) {
    const double v = g(s);
    if (v > gmax) {
      gmax = v;
      smax = s;
    }
  }
  if (!std::isfinite(gmax)) throw std::domain_error("moment integral vanishes or diverges");
  double lo = smax, hi = smax;
  while (lo > -kS && g(lo) > gmax - 60.0) lo -= 0.25;
  while (hi < kS && g(hi) > gmax - 60.0) hi += 0.25;
  if (g(std::max(lo, -kS)) > gmax - 40.0 || g(std::min(hi, kS)) > gmax - 40.0)
    throw std::domain_error("divergent moment integral");
  const double acc = integrate_split([&](double s) { return std::exp(g(s) - gmax); }, std::max(lo, -kS),
                                     std::min(hi, kS), breaks, 0.05, 10);
  return gmax + std::log(acc);
}

GramMatrix radial_gram(const RadialProfile& p, int n, double m) {
  GramMatrix G;
  G.n = n;
  G.center = p.center;
  G.diagonal = true;
  G.normalized = Eigen::MatrixXcd::Identity(n, n);
  G.log_scale.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // d lambda = pi e^s ds on rings: G_ii = pi int exp((i+1)s - m f(s)) ds
    const double lg = std::log(kPi) + log_integral_peaked(
                                          [&](double s) {
                                            const double v = p.f(s);
                                            return std::isinf(v) ? -kInf : (i + 1.0) * s - m * v;
                                          },
                                          p.breaks);
    G.log_scale[static_cast<std::size_t>(i)] = 0.5 * lg;
  }
  return G;
}

GramMatrix general_gram(const Potential& phi, int n, double m) {
  constexpr double kS = 60.0;
  const int n_ang = std::max(128, 4 * n);
  const GaussRule rule = composite_gauss(static_cast<int>(2 * kS / 0.05), 8, -kS, kS);
  const std::size_t K = rule.nodes.size();
  std::vector<double> cosv(static_cast<std::size_t>(n_ang)), sinv(static_cast<std::size_t>(n_ang));
  for (int a = 0; a < n_ang; ++a) {
    const double th = 2 * kPi * a / n_ang;
    cosv[static_cast<std::size_t>(a)] = std::cos(th);
    sinv[static_cast<std::size_t>(a)] = std::sin(th);
  }
  // per radial node: log prefactor and angular weights relative to the ring minimum
  std::vector<double> logpre(K, -kInf);
  std::vector<std::vector<double>> w(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double s = rule.nodes[k], r = std::exp(0.5 * s);
    std::vector<double> v(static_cast<std::size_t>(n_ang));
    double vmin = kInf;
    for (int a = 0; a < n_ang; ++a) {
      v[static_cast<std::size_t>(a)] = phi(Point(r * cosv[static_cast<std::size_t>(a)], r * sinv[static_cast<std::size_t>(a)]));
      vmin = std::min(vmin, v[static_cast<std::size_t>(a)]);
    }
    if (!std::isfinite(vmin)) continue;
    w[k].resize(static_cast<std::size_t>(n_ang));
    for (int a = 0; a < n_ang; ++a)
      w[k][static_cast<std::size_t>(a)] = std::exp(-m * (v[static_cast<std::size_t>(a)] - vmin));
    // d lambda = (1/2) e^s ds dtheta, trapezoid in theta
    logpre[k] = std::log(rule.weights[k] * 0.5 * 2 * kPi / n_ang) + s - m * vmin;
  }
  GramMatrix G;
  G.n = n;
  G.log_scale.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> terms;
    terms.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      if (!std::isfinite(logpre[k])) continue;
      double b0 = 0.0;
      for (double x : w[k]) b0 += x;
      terms.push_back(logpre[k] + i * rule.nodes[k] + std::log(b0));
    }
    const double lg = log_sum_exp(terms);
    if (!std::isfinite(lg)) throw std::domain_error("monomial_gram: divergent or vanishing moment");
    G.log_scale[static_cast<std::size_t>(i)] = 0.5 * lg;
  }
  G.normalized = Eigen::MatrixXcd::Zero(n, n);
  std::vector<std::complex<double>> B(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < K; ++k) {
    if (!std::isfinite(logpre[k])) continue;
    const double s = rule.nodes[k];
    for (int d = 0; d < n; ++d) {
      double re = 0.0, im = 0.0;
      for (int a = 0; a < n_ang; ++a) {
        const std::size_t idx = static_cast<std::size_t>((static_cast<long>(d) * a) % n_ang);
        re += w[k][static_cast<std::size_t>(a)] * cosv[idx];
        im += w[k][static_cast<std::size_t>(a)] * sinv[idx];
      }
      B[static_cast<std::size_t>(d)] = {re, im};
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        // z^i conj(z)^j = r^{i+j} e^{i(i-j)theta}
        const double lw = logpre[k] + 0.5 * (i + j) * s - G.log_scale[static_cast<std::size_t>(i)] -
                          G.log_scale[static_cast<std::size_t>(j)];
        if (lw < -745.0) continue;
        G.normalized(i, j) += std::exp(lw) * B[static_cast<std::size_t>(i - j)];
      }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) G.normalized(j, i) = std::conj(G.normalized(i, j));
  for (int i = 0; i < n; ++i) G.normalized(i, i) = G.normalized(i, i).real();
  return G;
}

}  // namespace

std::complex<double> GramMatrix::entry(int i, int j) const {
  return std::exp(log_scale[static_cast<std::size_t>(i)] + log_scale[static_cast<std::size_t>(j)]) *
         normalized(i, j);
}

double GramMatrix::log_det() const {
  double acc = 0.0;
  for (double s : log_scale) acc += 2.0 * s;
  if (diagonal) return acc;
  Eigen::LLT<Eigen::MatrixXcd> llt(normalized);
  if (llt.info() != Eigen::Success) throw std::domain_error("Gram matrix is not positive definite");
  const Eigen::MatrixXcd L = llt.matrixL();
  for (int i = 0; i < n; ++i) {
    const double d = L(i, i).real();
    if (!(d > 0.0)) throw std::domain_error("Gram matrix is not positive definite");
    acc += 2.0 * std::log(d);
  }
  return acc;
}

GramMatrix monomial_gram(const Potential& phi, int n, double m_exponent) {
  if (n < 1) throw std::invalid_argument("monomial_gram: n must be positive");
  if (phi.radial()) return radial_gram(*phi.radial(), n, m_exponent);
  return general_gram(phi, n, m_exponent);
}

double log_partition_weight(const Potential& phi, int n, double m_exponent) {
  return std::lgamma(n + 1.0) + monomial_gram(phi, n, m_exponent).log_det();
}

PartitionValue log_partition_beta1(const Potential& phi, int n, Convention convention) {
  PartitionValue v;
  v.n = n;
  v.beta = 1.0;
  v.convention = convention;
  v.method = PartitionMethod::gram;
  v.log_z = log_partition_weight(phi, n, weight_exponent(convention, n, 1.0));
  return v;
}

double log_z_fs(int n) {
  double acc = std::lgamma(n + 1.0);
  for (int j = 0; j < n; ++j) acc += log_fs_moment(j, n + 1);
  return acc;
}

double log_weight_integral(const Potential& phi, double m) {
  return 2.0 * monomial_gram(phi, 1, m).log_scale[0];
}

ErrorSequenceReport error_sequence(const Potential& phi, int n, double beta, const PartitionValue& z,
                                   double free_energy_phi) {
  (void)phi;
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("error_sequence: beta must lie in (0, 1]");
  const bool matches = z.n == n && z.beta == beta &&
                       (z.convention == Convention::exterior_NplusP ||
                        (beta == 1.0 && z.convention == Convention::adjoint_Nplus1));
  if (!matches) throw std::invalid_argument("error_sequence: partition value has a different (n, beta, convention)");
  const double p = p_of_beta(beta);
  const double N = n;
  ErrorSequenceReport r;
  r.n = n;
  r.beta = beta;
  r.specific = -(z.log_z / (beta * N * (N + p)) + free_energy_phi);
  constexpr double kFpsi0 = 0.5;
  r.universal = -(N + 1.0) / (N + p) * (log_z_fs(n) / (N * (N + 1.0)) + kFpsi0) -
                (1.0 / beta - 1.0) / (N + p) * (std::log(kPi) + 2.0 * kFpsi0);
  r.total = r.specific - r.universal;
  return r;
}

double holder_rhs(const Potential& phi_plus_u, int n, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("holder_rhs: beta must lie in (0, 1]");
  double rhs = log_partition_weight(phi_plus_u, n, n + 1.0);
  if (beta < 1.0) rhs += (1.0 / beta - 1.0) * n * log_weight_integral(phi_plus_u, 2.0);
  return rhs;
}

double universal_error_constant(int n_max) {
  double best = -kInf;
  for (int n = 1; n <= n_max; ++n) {
    const double N = n;
    const double u = log_z_fs(n) / (N * (N + 1.0)) + 0.5;
    best = std::max(best, N * (u - std::log(N) / (2.0 * N)));
  }
  return best;
}

double ErrorBound::bound(int n) const { return c_phi / n + std::log(static_cast<double>(n)) / (2.0 * n); }

ErrorBound error_bound(const Potential& phi) {
  ErrorBound b;
  double sup_ratio = 0.0, inf_diff = kInf;
  auto visit = [&](Point z) {
    const double v = phi(z);
    if (!std::isfinite(v)) return;
    sup_ratio = std::max(sup_ratio, std::max(0.0, phi.laplacian(z)) / (4.0 * kPi) * std::exp(2.0 * v));
    inf_diff = std::min(inf_diff, v - fs_potential(z));
  };
  if (phi.radial()) {
    const RadialProfile& p = *phi.radial();
    for (double s = -40.0; s <= 40.0; s += 0.005) {
      const double v = p.f(s);
      if (!std::isfinite(v)) continue;
      sup_ratio = std::max(sup_ratio, std::max(0.0, p.d2f(s)) * std::exp(2.0 * v - s) / kPi);
      inf_diff = std::min(inf_diff, v - std::log1p(std::exp(s)));
    }
  } else {
    visit({0.0, 0.0});
    for (int i = 0; i <= 600; ++i) {
      const double r = std::pow(10.0, -3.0 + 6.0 * i / 600);
      for (int a = 0; a < 64; ++a) visit(std::polar(r, 2 * kPi * a / 64));
    }
  }
  b.sup_curvature_ratio = sup_ratio;
  b.inf_phi_minus_psi0 = inf_diff;
  b.c_universal = universal_error_constant();
  b.c_phi = std::max(0.0, std::log(sup_ratio) - 1.0 - 2.0 * inf_diff) + b.c_universal;
  return b;
}

double mean_energy_defect(int n) {
  if (n < 2) throw std::invalid_argument("mean_energy_defect: need n >= 2");
  const double N = n;
  return 0.5 + (log_z_fs(n) - N * std::log(kPi) - std::lgamma(N + 1.0)) / (N * (N - 1.0));
}

Measure circular_law() { return uniform_disk(1.0); }

Measure bergman_density(const Potential& phi, int n, Convention convention) {
  const double m = weight_exponent(convention, n, 1.0);
  const GramMatrix G = monomial_gram(phi, n, m);
  const Point c = G.center;
  const std::vector<double> ls = G.log_scale;
  // B = (1/N) v* G^{-1} v e^{-V}, with v_i = (z - c)^i e^{-s_i} rescaled by its largest entry
  Eigen::MatrixXcd Linv;
  if (!G.diagonal) {
    Eigen::LLT<Eigen::MatrixXcd> llt(G.normalized);
    if (llt.info() != Eigen::Success) throw std::domain_error("bergman_density: Gram matrix not positive definite");
    Linv = llt.matrixL().solve(Eigen::MatrixXcd::Identity(n, n));
  }
  const Potential pot = phi;
  auto density = [pot, c, ls, Linv, n, m, diag = G.diagonal](Point z) {
    const double v = pot(z);
    if (!std::isfinite(v)) return 0.0;
    const Point d = z - c;
    const double lr = std::log(std::abs(d));
    std::vector<double> lmag(static_cast<std::size_t>(n));
    double top = -kInf;
    for (int i = 0; i < n; ++i) {
      lmag[static_cast<std::size_t>(i)] = (i == 0 ? 0.0 : i * lr) - ls[static_cast<std::size_t>(i)];
      top = std::max(top, lmag[static_cast<std::size_t>(i)]);
    }
    double q = 0.0;
    if (diag) {
      for (int i = 0; i < n; ++i) q += std::exp(2.0 * (lmag[static_cast<std::size_t>(i)] - top));
    } else {
      const double th = std::arg(d);
      Eigen::VectorXcd vec(n);
      for (int i = 0; i < n; ++i) vec(i) = std::polar(std::exp(lmag[static_cast<std::size_t>(i)] - top), i * th);
      q = (Linv * vec).squaredNorm();
    }
    return std::exp(std::log(q) + 2.0 * top - m * v) / n;
  };
  Measure mu = density_measure("bergman", density);
  if (phi.radial()) {
    // rotation-invariant: tabulate the ring density and its cumulative in s
    constexpr double kS = 60.0, ds = 0.002;
    const int K = static_cast<int>(2 * kS / ds) + 1;
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(K));
    auto cum = std::make_shared<std::vector<double>>(static_cast<std::size_t>(K), 0.0);
    auto ring = [density, c](double s) { return kPi * std::exp(s) * density(c + std::exp(0.5 * s)); };
    for (int k = 0; k < K; ++k) (*table)[static_cast<std::size_t>(k)] = ring(-kS + k * ds);
    for (int k = 1; k < K; ++k)
      (*cum)[static_cast<std::size_t>(k)] =
          (*cum)[static_cast<std::size_t>(k - 1)] +
          0.5 * ds * ((*table)[static_cast<std::size_t>(k - 1)] + (*table)[static_cast<std::size_t>(k)]);
    RadialMeasure r;
    r.center = c;
    r.intervals = {{-kS, kS}};
    r.density = ring;
    r.cumulative = [cum, K](double s) {
      const double x = (s + kS) / ds;
      if (x <= 0.0) return 0.0;
      if (x >= K - 1) return cum->back();
      const int k = static_cast<int>(x);
      const double t = x - k;
      return (1 - t) * (*cum)[static_cast<std::size_t>(k)] + t * (*cum)[static_cast<std::size_t>(k + 1)];
    };
    r.mass = cum->back();
    Measure out = radial_measure("bergman", std::move(r));
    out.density = density;
    return out;
  }
  return mu;
}

}  // namespace coulomb
