#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "coulomb/lattice.hpp"
#include "coulomb/measure.hpp"
#include "coulomb/potentials.hpp"

namespace coulomb {

struct Residuals {
  double complementarity = 0.0;  // max |min(phi - psi, avg - psi)|
  double mass = 0.0;             // |grid mass + tail mass - 1|
  double orthogonality = 0.0;    // |sum (phi - psi) dd^c psi|
};

struct EnvelopeOptions {
  double h = 1.0 / 128;
  double radius = 0.0;       // 0: 1.5 x outer_radius_bound, or fallback_radius
  double fallback_radius = 4.0;
  double tol = 0.0;          // droplet threshold on phi - P phi; 0: 10 h^2 sup|lap phi|
  double coarsest_h = 1.0 / 16;
  double mass_tol = 1e-9;
  int multipole_terms = 40;
  long max_sweeps = 2'000'000;
  std::shared_ptr<const Lattice> lattice;  // reuse an existing lattice
};

struct EquilibriumResult {
  GridFunction p_phi;
  GridFunction phi;      // obstacle samples
  GridFunction density;  // mu_phi density w.r.t. Lebesgue
  std::vector<std::uint8_t> support_mask;
  double free_energy = std::numeric_limits<double>::quiet_NaN();
  Residuals residuals;
  double robin_constant = 0.0;  // P phi = log|z|^2 + c + o(1)
  double tail_mass = 0.0;       // equilibrium mass outside the grid
  double tol = 0.0;
  long sweeps = 0;

  const Lattice& lattice() const { return *p_phi.grid; }
  Measure measure() const { return grid_measure("mu_phi", density); }
  /// min and max |z - c| over the droplet mask.
  std::pair<double, double> droplet_radii(Point c = {0.0, 0.0}) const;
};

/// Exact envelope of a radial potential: lower convex minorant in s with
/// slopes in [0, 1].
struct RadialEnvelope {
  Point center{0.0, 0.0};
  std::vector<std::pair<double, double>> contact;  // coincidence intervals in s
  double s_left = 0.0, s_right = 0.0;               // ends of the slope-0 / slope-1 pieces
  bool left_flat = false, right_log = false;
  double robin_constant = 0.0;
  RadialMeasure measure;
  std::function<double(double)> g;  // P phi as a function of s

  double eval(Point z) const { return g(std::log(std::norm(z - center))); }
};

RadialEnvelope radial_envelope(const Potential& phi);

/// Discrete obstacle problem min(phi - psi, avg - psi) = 0 by projected SOR on
/// a cascade of lattices, with log-growth boundary data refreshed from the
/// multipole expansion of the current measure.
EquilibriumResult project_envelope(const Potential& phi, const EnvelopeOptions& opt = {});

/// Radius used by project_envelope for phi under opt.
double solver_radius(const Potential& phi, const EnvelopeOptions& opt);

}  // namespace coulomb
