#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coulomb/determinantal.hpp"
#include "coulomb/potentials.hpp"

namespace coulomb {

/// Keyed SplitMix64 counter generator: draw k of stream s is mix(key(seed, s) + (k+1) G).
/// Streams with different ids are independent; split() derives a child stream.
/// Normals use Box-Muller so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();
  double uniform();  // in (0, 1)
  double normal();
  /// Standard complex Gaussian, E|z|^2 = 1.
  Point complex_normal();
  double exponential();
  Rng split(std::uint64_t stream) const;
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

struct Configuration {
  std::vector<Point> points;
};

/// steps, burn_in and thin count sweeps (n single-site proposals each).
struct SamplerConfig {
  int n = 2;
  double beta = 1.0;
  Convention potential_convention = Convention::exterior_NplusP;
  long steps = 20000;
  long burn_in = 2000;
  int thin = 10;
  double proposal_sigma = 0.3;
  std::uint64_t seed = 1;
  int chains = 1;
};

struct SampleSet {
  std::vector<Configuration> configs;
  std::vector<double> energies;  // H of each kept configuration
  double acceptance_rate = 0.0;
  double autocorr_time_estimate = 1.0;  // in kept samples
  std::uint64_t seed = 0;
};

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 5).
double integrated_autocorr_time(const std::vector<double>& x);

/// -1/2 sum_{i != j} log|z_i - z_j|^2 + sum V(z_i), V = m phi with m per convention.
double hamiltonian(const Configuration& config, const Potential& phi, int n, Convention convention,
                   double beta = 1.0);
double hamiltonian_weighted(const Configuration& config, const Potential& phi, double m_exponent);

/// Change of H when point i moves to w.
double delta_energy(const Configuration& config, std::size_t i, Point w, const Potential& phi,
                    double m_exponent);

/// Throws InadmissiblePotential when V = N phi is paired with merely logarithmic
/// growth, or any convention with inadmissible growth.
void check_convention(const Potential& phi, Convention convention);

/// Single-site Metropolis targeting e^{-beta H} for V = m phi, m per convention.
SampleSet mcmc_run(const SamplerConfig& cfg, const Potential& phi);
/// Same with an explicit weight exponent (V = m phi).
SampleSet mcmc_run_weighted(const SamplerConfig& cfg, const Potential& phi, double m_exponent);

/// Eigenvalues of an n x n matrix of independent complex Gaussians of variance 1/n.
Configuration ginibre_sample(int n, std::uint64_t seed);
/// Moduli of the Ginibre eigenvalues (independent sqrt(Gamma(k, 1) / n)) with
/// independent uniform angles: exact in law for rotation-invariant statistics.
Configuration ginibre_moduli_sample(int n, std::uint64_t seed);
/// Eigenvalues of A B^{-1}, A and B independent standard complex Gaussian.
/// A numerically singular B is redrawn from the next stream; redraws are counted.
Configuration spherical_sample(int n, std::uint64_t seed, int* redraws = nullptr);

enum class Ensemble { ginibre, ginibre_moduli, spherical };
Ensemble parse_ensemble(const std::string& s);
const char* to_string(Ensemble e);
/// reps independent exact draws; draw r uses the seed of stream r.
SampleSet exact_samples(Ensemble ensemble, int n, int reps, std::uint64_t seed);

/// log Z_{N,beta}[(N+p) phi] by thermodynamic integration from beta' = 1 (Gram
/// value at the same V) with 8-point Gauss-Legendre in beta'. The handle's
/// steps, burn_in, thin, sigma and seed drive each chain; beta and n are set here.
PartitionValue thermo_log_z(const Potential& phi, int n, double beta, const SamplerConfig& handle);

void write_configuration_csv(const std::string& path, const Configuration& c);
Configuration read_configuration_csv(const std::string& path);
/// "CGCF", u16 version = 1, u32 n, then n little-endian (x, y) f64 pairs.
void write_cgcf(const std::string& path, const Configuration& c);
Configuration read_cgcf(const std::string& path);

}  // namespace coulomb
