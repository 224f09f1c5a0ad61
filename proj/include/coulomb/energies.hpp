#pragma once

#include <string>

#include "coulomb/envelope.hpp"
#include "coulomb/measure.hpp"
#include "coulomb/potentials.hpp"

namespace coulomb {

/// -1/2 int int log|z-w|^2 dmu dmu. Throws AtomicMeasure when mu has atoms.
double log_energy_E0(const Measure& mu);

/// E0(mu) + int (phi + u) dmu, evaluated in the psi0-renormalized form.
double weighted_energy(const Potential& phi, const TestFunction& u, const Measure& mu);
double weighted_energy(const Potential& phi, const Measure& mu);

/// Minimal weighted energy F(phi + u): exact for radial potentials, otherwise
/// from the obstacle solver's equilibrium measure.
double free_energy(const Potential& phi, const TestFunction& u, const EnvelopeOptions& opt = {});
double free_energy(const Potential& phi, const EnvelopeOptions& opt = {});

/// E0 + int phi dmu for a solved envelope with compact droplet.
double grid_free_energy(const EquilibriumResult& res);

/// E(psi) = 1/2 int (psi - psi0)(dd^c psi + dd^c psi0) for lattice samples of a
/// log-growth subharmonic psi and of log(1+|z|^2).
double energy_functional_E(const GridFunction& psi, const GridFunction& psi0);
GridFunction sample_fs(const std::shared_ptr<const Lattice>& grid);

/// J(u) = 1/2 ||u||^2_{H^1}.
double dirichlet_J(const TestFunction& u);
/// J(P a - P b) from two envelopes solved on the same lattice.
double dirichlet_J(const EquilibriumResult& a, const EquilibriumResult& b);

/// int log(dmu/dref) dmu; +inf when mu has atoms.
double entropy(const Measure& mu, const Measure& ref);

/// -2 E0(mu) + D_{Lebesgue}(mu).
double mabuchi(const Measure& mu);

/// |sum (phi - P phi) dd^c P phi| on the lattice.
double orthogonality_residual(const EquilibriumResult& res, const Potential& phi);

struct Psi0Moment {
  double value = 0.0;  // int psi0 dmu, or the last truncated value when inconclusive
  bool finite = false;
  std::string reason;  // why the check was inconclusive
};
/// int psi0 dmu. Radial measures compare truncations at s = 40 and at the end of
/// the support; lattice measures count as finite when no mass touches the boundary ring.
Psi0Moment psi0_moment(const Measure& mu);

/// ||mu1 - mu2||_{H^{-1}}: square root of the Green double integral.
double h_minus1_distance(const Measure& mu1, const Measure& mu2);

struct HarmonicExtension {
  TestFunction u_s;
  double sigma_sq = 0.0;  // (1/4pi) int |grad u^S|^2
};

/// u on the droplet, bounded and discrete-harmonic off it.
HarmonicExtension harmonic_extension(const TestFunction& u, const EquilibriumResult& res);

}  // namespace coulomb
