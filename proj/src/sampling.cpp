#include "coulomb/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <lapacke.h>

#include "coulomb/parallel.hpp"
#include "coulomb/quadrature.hpp"

namespace coulomb {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed + kGolden) ^ mix64((stream + 1) * 0xD1B54A32D192ED03ULL)) {}

std::uint64_t Rng::next() { return mix64(key_ + (++counter_) * kGolden); }

double Rng::uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double a = 2 * kPi * uniform();
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Point Rng::complex_normal() {
  const double x = normal(), y = normal();
  return {x * std::sqrt(0.5), y * std::sqrt(0.5)};
}

double Rng::exponential() { return -std::log(uniform()); }

Rng Rng::split(std::uint64_t stream) const {
  Rng child(0);
  child.key_ = mix64(key_ ^ mix64((stream + 1) * 0xA0761D6478BD642FULL));
  return child;
}

double integrated_autocorr_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
    c /= static_cast<double>(n) * c0;
    tau += 2.0 * c;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

double hamiltonian_weighted(const Configuration& config, const Potential& phi, double m_exponent) {
  const auto& z = config.points;
  double h = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double d = std::norm(z[i] - z[j]);
      if (d == 0.0) throw SingularEvaluation("hamiltonian: coincident points");
      h -= std::log(d);
    }
    h += m_exponent * phi(z[i]);
  }
  return h;
}

double hamiltonian(const Configuration& config, const Potential& phi, int n, Convention convention, double beta) {
  if (static_cast<int>(config.points.size()) != n) throw std::invalid_argument("hamiltonian: size mismatch");
  return hamiltonian_weighted(config, phi, weight_exponent(convention, n, beta));
}

double delta_energy(const Configuration& config, std::size_t i, Point w, const Potential& phi, double m_exponent) {
  const auto& z = config.points;
  double d = m_exponent * (phi(w) - phi(z[i]));
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j != i) d -= std::log(std::norm(w - z[j])) - std::log(std::norm(z[i] - z[j]));
  return d;
}

void check_convention(const Potential& phi, Convention convention) {
  const GrowthClass g = phi.growth();
  if (g == GrowthClass::Inadmissible) throw InadmissiblePotential("potential does not have admissible growth");
  if (convention == Convention::exterior_Nphi && g != GrowthClass::StrictlySuperLog)
    throw InadmissiblePotential("V = N phi needs strictly super-logarithmic growth: Z is infinite");
}

namespace {

struct ChainResult {
  std::vector<Configuration> configs;
  std::vector<double> energies;
  long accepted = 0;
  long proposed = 0;
};

ChainResult run_chain(const SamplerConfig& cfg, const Potential& phi, double m, Rng rng) {
  const int n = cfg.n;
  const double beta = cfg.beta;
  std::vector<Point> z(static_cast<std::size_t>(n));
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw ConvergenceFailure("mcmc: no finite starting point");
      const Point w = 0.7 * rng.complex_normal();
      const double vw = m * phi(w);
      bool ok = std::isfinite(vw);
      for (int j = 0; j < i && ok; ++j) ok = std::norm(w - z[static_cast<std::size_t>(j)]) > 0.0;
      if (ok) {
        z[static_cast<std::size_t>(i)] = w;
        v[static_cast<std::size_t>(i)] = vw;
        break;
      }
    }
  }
  // cached log|z_i - z_j|^2
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      L(i, j) = L(j, i) = std::log(std::norm(z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)]));

  ChainResult out;
  double sigma = cfg.proposal_sigma;
  long win_acc = 0, win_prop = 0;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (long sweep = 0; sweep < cfg.steps; ++sweep) {
    const bool burning = sweep < cfg.burn_in;
    for (int i = 0; i < n; ++i) {
      const Point w = z[static_cast<std::size_t>(i)] + Point(sigma * rng.normal(), sigma * rng.normal());
      const double u = rng.uniform();
      if (burning) ++win_prop; else ++out.proposed;
      const double vw = m * phi(w);
      if (!std::isfinite(vw)) continue;
      double dh = vw - v[static_cast<std::size_t>(i)];
      bool finite = true;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double r = std::log(std::norm(w - z[static_cast<std::size_t>(j)]));
        if (!std::isfinite(r)) {
          finite = false;
          break;
        }
        row[static_cast<std::size_t>(j)] = r;
        dh -= r - L(i, j);
      }
      if (!finite) continue;
      if (dh <= 0.0 || u < std::exp(-beta * dh)) {
        z[static_cast<std::size_t>(i)] = w;
        v[static_cast<std::size_t>(i)] = vw;
        for (int j = 0; j < n; ++j)
          if (j != i) L(i, j) = L(j, i) = row[static_cast<std::size_t>(j)];
        if (burning) ++win_acc; else ++out.accepted;
      }
    }
    if (burning) {
      if ((sweep + 1) % 25 == 0) {
        const double rate = static_cast<double>(win_acc) / static_cast<double>(std::max(1L, win_prop));
        sigma = std::clamp(sigma * std::exp(2.0 * (rate - 0.4)), 1e-6, 1e3);
        win_acc = win_prop = 0;
      }
    } else if ((sweep - cfg.burn_in) % cfg.thin == cfg.thin - 1) {
      double h = 0.0;
      for (int a = 0; a < n; ++a) {
        h += v[static_cast<std::size_t>(a)];
        for (int b = a + 1; b < n; ++b) h -= L(a, b);
      }
      out.configs.push_back({z});
      out.energies.push_back(h);
    }
  }
  return out;
}

}  // namespace

SampleSet mcmc_run_weighted(const SamplerConfig& cfg, const Potential& phi, double m_exponent) {
  if (cfg.n < 1) throw std::invalid_argument("mcmc: n must be positive");
  if (!(cfg.steps > cfg.burn_in) || cfg.burn_in < 0) throw std::invalid_argument("mcmc: need steps > burn_in >= 0");
  if (!(cfg.proposal_sigma > 0.0)) throw std::invalid_argument("mcmc: proposal_sigma must be positive");
  if (cfg.thin < 1 || cfg.chains < 1) throw std::invalid_argument("mcmc: thin and chains must be positive");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("mcmc: beta must be positive");
  const Rng root(cfg.seed);
  std::vector<ChainResult> chains(static_cast<std::size_t>(cfg.chains));
  parallel_for(chains.size(), [&](std::size_t c) { chains[c] = run_chain(cfg, phi, m_exponent, root.split(c)); });
  SampleSet s;
  s.seed = cfg.seed;
  long acc = 0, prop = 0;
  double tau = 0.0;
  for (auto& c : chains) {
    acc += c.accepted;
    prop += c.proposed;
    tau += integrated_autocorr_time(c.energies);
    s.configs.insert(s.configs.end(), c.configs.begin(), c.configs.end());
    s.energies.insert(s.energies.end(), c.energies.begin(), c.energies.end());
  }
  s.acceptance_rate = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  s.autocorr_time_estimate = tau / cfg.chains;
  if (acc == 0) throw ConvergenceFailure("mcmc: zero acceptance");
  return s;
}

SampleSet mcmc_run(const SamplerConfig& cfg, const Potential& phi) {
  check_convention(phi, cfg.potential_convention);
  return mcmc_run_weighted(cfg, phi, weight_exponent(cfg.potential_convention, cfg.n, cfg.beta));
}

namespace {

Eigen::MatrixXcd gaussian_matrix(int n, Rng& rng, double scale) {
  Eigen::MatrixXcd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = scale * rng.complex_normal();
  return a;
}

lapack_complex_double* lp(std::complex<double>* p) { return reinterpret_cast<lapack_complex_double*>(p); }

Configuration eigenvalues(Eigen::MatrixXcd m) {
  const int n = static_cast<int>(m.rows());
  Configuration c;
  c.points.resize(static_cast<std::size_t>(n));
  if (LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, lp(m.data()), n, lp(c.points.data()), nullptr, 1, nullptr, 1) != 0)
    throw ConvergenceFailure("eigensolver failed");
  return c;
}

Configuration ginibre_draw(int n, Rng& rng) { return eigenvalues(gaussian_matrix(n, rng, 1.0 / std::sqrt(n))); }

Configuration ginibre_moduli_draw(int n, Rng& rng) {
  Configuration c;
  c.points.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    double g = 0.0;
    for (int i = 0; i < k; ++i) g += rng.exponential();
    c.points.push_back(std::polar(std::sqrt(g / n), 2 * kPi * rng.uniform()));
  }
  return c;
}

Configuration spherical_draw(int n, Rng& rng, int* redraws) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXcd a = gaussian_matrix(n, rng, 1.0);
    Eigen::MatrixXcd b = gaussian_matrix(n, rng, 1.0);
    // generalized eigenvalues alpha / beta of the pencil (A, B)
    std::vector<std::complex<double>> alpha(static_cast<std::size_t>(n)), beta(static_cast<std::size_t>(n));
    if (LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'N', n, lp(a.data()), n, lp(b.data()), n, lp(alpha.data()),
                      lp(beta.data()), nullptr, 1, nullptr, 1) != 0)
      throw ConvergenceFailure("generalized eigensolver failed");
    bool singular = false;
    for (int i = 0; i < n; ++i)
      if (std::abs(beta[static_cast<std::size_t>(i)]) < 1e-13 * std::abs(alpha[static_cast<std::size_t>(i)]))
        singular = true;
    if (singular) {
      if (redraws) ++*redraws;
      rng = rng.split(static_cast<std::uint64_t>(attempt) + 1);
      continue;
    }
    Configuration c;
    c.points.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      c.points[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(i)] / beta[static_cast<std::size_t>(i)];
    return c;
  }
  throw ConvergenceFailure("spherical_sample: B singular in 100 draws");
}

}  // namespace

Configuration ginibre_sample(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ginibre_sample: n must be positive");
  Rng rng(seed);
  return ginibre_draw(n, rng);
}

Configuration ginibre_moduli_sample(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ginibre_moduli_sample: n must be positive");
  Rng rng(seed);
  return ginibre_moduli_draw(n, rng);
}

Configuration spherical_sample(int n, std::uint64_t seed, int* redraws) {
  if (n < 1) throw std::invalid_argument("spherical_sample: n must be positive");
  Rng rng(seed);
  if (redraws) *redraws = 0;
  return spherical_draw(n, rng, redraws);
}

Ensemble parse_ensemble(const std::string& s) {
  if (s == "ginibre") return Ensemble::ginibre;
  if (s == "ginibre_moduli") return Ensemble::ginibre_moduli;
  if (s == "spherical") return Ensemble::spherical;
  throw std::invalid_argument("unknown ensemble: " + s);
}

const char* to_string(Ensemble e) {
  switch (e) {
    case Ensemble::ginibre: return "ginibre";
    case Ensemble::ginibre_moduli: return "ginibre_moduli";
    case Ensemble::spherical: return "spherical";
  }
  return "?";
}

SampleSet exact_samples(Ensemble ensemble, int n, int reps, std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("exact_samples: reps must be positive");
  SampleSet s;
  s.seed = seed;
  s.configs.resize(static_cast<std::size_t>(reps));
  parallel_for(s.configs.size(), [&](std::size_t r) {
    Rng rng(seed, r);
    switch (ensemble) {
      case Ensemble::ginibre: s.configs[r] = ginibre_draw(n, rng); break;
      case Ensemble::ginibre_moduli: s.configs[r] = ginibre_moduli_draw(n, rng); break;
      case Ensemble::spherical: s.configs[r] = spherical_draw(n, rng, nullptr); break;
    }
  });
  s.acceptance_rate = 1.0;
  s.autocorr_time_estimate = 1.0;
  return s;
}

PartitionValue thermo_log_z(const Potential& phi, int n, double beta, const SamplerConfig& handle) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("thermo_log_z: beta must lie in (0, 1]");
  const double m = n + p_of_beta(beta);
  PartitionValue v;
  v.n = n;
  v.beta = beta;
  v.convention = Convention::exterior_NplusP;
  v.method = PartitionMethod::thermo_integration;
  v.log_z = log_partition_weight(phi, n, m);
  if (beta == 1.0) {
    v.method = PartitionMethod::gram;
    return v;
  }
  check_convention(phi, Convention::exterior_NplusP);
  // d log Z / d beta' = -E_{beta'}[H]
  const GaussRule rule = gauss_legendre(8, beta, 1.0);
  double var = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    SamplerConfig cfg = handle;
    cfg.n = n;
    cfg.beta = rule.nodes[k];
    cfg.seed = mix64(handle.seed ^ mix64(k + 1));
    const SampleSet s = mcmc_run_weighted(cfg, phi, m);
    const std::size_t count = s.energies.size();
    if (static_cast<double>(count) < 50.0 * s.autocorr_time_estimate)
      throw ConvergenceFailure("thermo_log_z: chain shorter than 50 autocorrelation times");
    double mean = 0.0, sq = 0.0;
    for (double e : s.energies) mean += e;
    mean /= static_cast<double>(count);
    for (double e : s.energies) sq += (e - mean) * (e - mean);
    const double se2 = sq / static_cast<double>(count - 1) * s.autocorr_time_estimate / static_cast<double>(count);
    v.log_z += rule.weights[k] * mean;
    var += rule.weights[k] * rule.weights[k] * se2;
  }
  v.error_bar = std::sqrt(var);
  return v;
}

void write_configuration_csv(const std::string& path, const Configuration& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "x,y\n";
  for (const auto& p : c.points) out << p.real() << ',' << p.imag() << '\n';
}

Configuration read_configuration_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  Configuration c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed configuration row: " + line);
    c.points.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return c;
}

namespace {

void put_le(std::ostream& out, std::uint64_t bits, int bytes) {
  for (int b = 0; b < bytes; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    const int ch = in.get();
    if (ch == EOF) throw std::runtime_error("truncated CGCF file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * b);
  }
  return v;
}

}  // namespace

void write_cgcf(const std::string& path, const Configuration& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("CGCF", 4);
  put_le(out, 1, 2);
  put_le(out, c.points.size(), 4);
  for (const auto& p : c.points) {
    put_le(out, std::bit_cast<std::uint64_t>(p.real()), 8);
    put_le(out, std::bit_cast<std::uint64_t>(p.imag()), 8);
  }
}

Configuration read_cgcf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CGCF", 4) != 0) throw std::runtime_error("not a CGCF file: " + path);
  if (get_le(in, 2) != 1) throw std::runtime_error("unsupported CGCF version");
  const std::uint64_t n = get_le(in, 4);
  Configuration c;
  c.points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = std::bit_cast<double>(get_le(in, 8));
    const double y = std::bit_cast<double>(get_le(in, 8));
    c.points.emplace_back(x, y);
  }
  return c;
}

}  // namespace coulomb
