#pragma once

// Riemann-sphere dictionary for the plane chart z (the chart w = 1/z is only
// used internally by the tail quadrature).

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coulomb {

using Point = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

class SingularEvaluation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fubini-Study potential log(1+|z|^2).
double fs_potential(Point z);

/// Density of the uniform probability measure on the sphere, (1/pi)(1+|z|^2)^-2.
double mu0_density(Point z);

/// log((1+|z|^2)(1+|w|^2)/|z-w|^2). Throws SingularEvaluation when z == w.
double green_g0(Point z, Point w);

/// Cosine of the polar angle of the stereographic image (north pole at z = 0).
inline double sphere_cos_theta(Point z) {
  const double r2 = std::norm(z);
  return (1.0 - r2) / (1.0 + r2);
}

/// Inner product of the unit vectors of the stereographic images of z and w.
double sphere_dot(Point z, Point w);

enum class TailRule { none, inversion_chart };

struct QuadratureSpec {
  double cutoff_radius = 1.0;
  int n_radial = 64;
  int n_angular = 64;
  TailRule tail_rule = TailRule::inversion_chart;
};

/// Lebesgue-weighted node set on the disk |z| <= cutoff_radius, optionally
/// extended to all of C through the w = 1/z chart.
struct Quadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;
  double cutoff_radius = 1.0;
  TailRule tail_rule = TailRule::none;
  std::size_t inner_count = 0;

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(nodes[k]);
    return acc;
  }
};

Quadrature make_plane_quadrature(const QuadratureSpec& spec);

/// Quadrature used whenever a caller does not supply one.
const Quadrature& reference_quadrature();

/// -1/2 * double integral of G0 against mu0 x mu0, with the diagonal replaced by
/// the self-energy of each node's cell.
double green_constant(const Quadrature& quad);
double green_constant();

/// Real spherical harmonics orthonormal in L^2(mu0), eigenvalues l(l+1) of the
/// positive Laplacian -dd^c / mu0.
class HarmonicBasis {
 public:
  explicit HarmonicBasis(int l_max);

  int l_max() const { return l_max_; }
  static double eigenvalue(int l) { return static_cast<double>(l) * (l + 1); }
  std::size_t size() const { return static_cast<std::size_t>(l_max_ + 1) * (l_max_ + 1); }
  static std::size_t index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }

  double eval(int l, int m, Point z) const;
  /// All Y_{l,m}(z) for l <= l_max, laid out by index(l, m).
  void eval_all(Point z, std::span<double> out) const;

 private:
  int l_max_;
};

double sph_harm_eval(const HarmonicBasis& basis, int l, int m, Point z);

/// Legendre polynomials P_0..P_{l_max} at t.
void legendre_values(double t, int l_max, std::span<double> out);

}  // namespace coulomb
