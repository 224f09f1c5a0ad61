#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coulomb/geometry.hpp"
#include "coulomb/lattice.hpp"

namespace coulomb {

class AtomicMeasure : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rotation-invariant measure about `center`, described in s = log|z - c|^2:
/// d mu = density(s) ds on the listed intervals, cumulative(s) = mu{|z-c|^2 < e^s}.
struct RadialMeasure {
  Point center{0.0, 0.0};
  std::vector<std::pair<double, double>> intervals;
  std::function<double(double)> density;
  std::function<double(double)> cumulative;
  double mass = 1.0;
  std::vector<double> breaks;  // quadrature split points inside the intervals

  /// int g(s) density(s) ds over the intervals.
  double integrate(const std::function<double(double)>& g) const;
};

struct Atom {
  Point location;
  double mass = 0.0;
};

/// A measure on C carried by any combination of representations. Density
/// functions are with respect to Lebesgue measure.
struct Measure {
  std::string name;
  std::optional<RadialMeasure> radial;
  std::optional<GridFunction> grid;  // density at interior lattice nodes
  std::function<double(Point)> density;
  std::vector<Atom> atoms;

  double total_mass() const;
  bool has_atoms() const { return !atoms.empty(); }
};

Measure lebesgue_measure();
Measure mu0_measure();
Measure uniform_disk(double radius = 1.0, Point center = {0.0, 0.0});
Measure radial_measure(std::string name, RadialMeasure r);
Measure grid_measure(std::string name, GridFunction density);
Measure atomic_measure(std::vector<Atom> atoms);
Measure density_measure(std::string name, std::function<double(Point)> density);

/// Density of mu sampled on a lattice (interior nodes), from whichever
/// representation is available.
GridFunction rasterize(const Measure& mu, const std::shared_ptr<const Lattice>& grid);

/// Push-forward under z -> e^t (z - c) + c.
Measure dilate(const Measure& mu, double t);

/// int f d mu using the best available representation.
double integrate(const Measure& mu, const std::function<double(Point)>& f);

}  // namespace coulomb
