#pragma once

#include <vector>

#include "coulomb/determinantal.hpp"
#include "coulomb/measure.hpp"
#include "coulomb/potentials.hpp"

namespace coulomb {

/// log of the 2N-dimensional integral of prod |z_i - z_j|^{2 beta} prod e^{-beta V(z_i)}
/// with V = m (phi + u), m per convention, for N <= 3. Evaluated on the sphere
/// (Gauss-Legendre in the polar angle, trapezoid in longitude, geodesic polar
/// coordinates for the second point) at three node counts; error_bar from the
/// Richardson estimate. base_nodes = 0 picks a default per N.
PartitionValue brute_force_log_z(const Potential& phi, const TestFunction& u, int n, double beta,
                                 Convention convention, int base_nodes = 0);
PartitionValue brute_force_log_z(const Potential& phi, int n, double beta, Convention convention,
                                 int base_nodes = 0);

/// Right side of the Gibbs variational inequality with reference Lebesgue measure:
/// (1/beta) log Z >= -int H nu^N - (N/beta) D_lambda(nu).
double gibbs_lower_bound(const Potential& phi, int n, double beta, Convention convention, const Measure& nu);

/// Cells on the sphere: polar-angle bands (breaks strictly inside (0, pi), north
/// pole at z = 0) times equal longitude sectors. index = band * sectors + sector.
struct SphereCells {
  std::vector<double> polar_breaks;
  int sectors = 1;

  int count() const { return static_cast<int>(polar_breaks.size() + 1) * sectors; }
  int cell_of(Point z) const;
};

/// Joint probabilities P[a * count + b] that (z_1, z_2) falls in cells (a, b) under
/// the normalized N = 2 Gibbs density, by Gauss-Legendre on each cell.
std::vector<double> two_point_cell_probabilities(const Potential& phi, double beta, Convention convention,
                                                 const SphereCells& cells, int nodes = 12);

}  // namespace coulomb
