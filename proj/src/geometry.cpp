#include "coulomb/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "coulomb/quadrature.hpp"

namespace coulomb {

double fs_potential(Point z) { return std::log1p(std::norm(z)); }

double mu0_density(Point z) {
  const double q = 1.0 + std::norm(z);
  return 1.0 / (kPi * q * q);
}

double green_g0(Point z, Point w) {
  const double d2 = std::norm(z - w);
  if (d2 == 0.0) throw SingularEvaluation("green_g0: coincident points");
  // (1+|z|^2)(1+|w|^2) is symmetric under exchange, so is the result
  return std::log((1.0 + std::norm(z)) * (1.0 + std::norm(w)) / d2);
}

double sphere_dot(Point z, Point w) {
  const double az = 1.0 + std::norm(z);
  const double aw = 1.0 + std::norm(w);
  // 1 - chordal^2/2 with chordal^2 = 4|z-w|^2 / ((1+|z|^2)(1+|w|^2))
  return 1.0 - 2.0 * std::norm(z - w) / (az * aw);
}

Quadrature make_plane_quadrature(const QuadratureSpec& spec) {
  if (spec.cutoff_radius <= 0.0 || spec.n_radial < 1 || spec.n_angular < 1)
    throw std::invalid_argument("make_plane_quadrature: bad spec");
  Quadrature q;
  q.cutoff_radius = spec.cutoff_radius;
  q.tail_rule = spec.tail_rule;
  const GaussRule radial = gauss_legendre(spec.n_radial, 0.0, spec.cutoff_radius);
  const double dtheta = 2.0 * kPi / spec.n_angular;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = radial.nodes[i];
    for (int k = 0; k < spec.n_angular; ++k) {
      q.nodes.push_back(std::polar(r, (k + 0.5) * dtheta));
      q.weights.push_back(radial.weights[i] * r * dtheta);
    }
  }
  q.inner_count = q.nodes.size();
  if (spec.tail_rule == TailRule::inversion_chart) {
    // z = 1/w with |w| <= 1/R; d lambda(z) = |w|^-4 d lambda(w)
    const GaussRule outer = gauss_legendre(spec.n_radial, 0.0, 1.0 / spec.cutoff_radius);
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
      const double rho = outer.nodes[i];
      for (int k = 0; k < spec.n_angular; ++k) {
        const Point w = std::polar(rho, (k + 0.5) * dtheta);
        q.nodes.push_back(1.0 / w);
        q.weights.push_back(outer.weights[i] * rho * dtheta / (rho * rho * rho * rho));
      }
    }
  }
  return q;
}

const Quadrature& reference_quadrature() {
  static const Quadrature q = make_plane_quadrature(QuadratureSpec{});
  return q;
}

double green_constant(const Quadrature& quad) {
  const std::size_t n = quad.nodes.size();
  std::vector<double> mass(n), psi(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = quad.weights[i] * mu0_density(quad.nodes[i]);
    psi[i] = fs_potential(quad.nodes[i]);
    x[i] = quad.nodes[i].real();
    y[i] = quad.nodes[i].imag();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      row += mass[j] * (psi[i] + psi[j] - std::log(dx * dx + dy * dy));
    }
    total += 2.0 * mass[i] * row;
    // diagonal: the node's cell is replaced by a disk of equal area, over which
    // the mean of -log|z-w|^2 is 1/2 - log rho^2
    const double rho2 = quad.weights[i] / kPi;
    total += mass[i] * mass[i] * (2.0 * psi[i] + 0.5 - std::log(rho2));
  }
  return -0.5 * total;
}

double green_constant() { return green_constant(reference_quadrature()); }

HarmonicBasis::HarmonicBasis(int l_max) : l_max_(l_max) {
  if (l_max < 1) throw std::invalid_argument("HarmonicBasis: l_max must be >= 1");
}

namespace {

// Associated Legendre functions normalised so that int_{-1}^{1} Q^2 dx/2 = 1,
// without the Condon-Shortley phase. out[l*(l+1)/2 + m] for 0 <= m <= l.
void normalized_legendre(double x, int l_max, std::vector<double>& out) {
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  out.assign(static_cast<std::size_t>((l_max + 1) * (l_max + 2) / 2), 0.0);
  auto at = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
  out[at(0, 0)] = 1.0;
  for (int m = 1; m <= l_max; ++m)
    out[at(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * out[at(m - 1, m - 1)];
  for (int m = 0; m < l_max; ++m) out[at(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * out[at(m, m)];
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double l2 = static_cast<double>(l) * l, m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double b = std::sqrt((2.0 * l + 1.0) * ((l - 1.0) * (l - 1.0) - m2) /
                                 ((2.0 * l - 3.0) * (l2 - m2)));
      out[at(l, m)] = a * x * out[at(l - 1, m)] - b * out[at(l - 2, m)];
    }
  }
}

}  // namespace

double HarmonicBasis::eval(int l, int m, Point z) const {
  if (l < 0 || l > l_max_ || std::abs(m) > l)
    throw std::out_of_range("sph_harm_eval: index out of range");
  std::vector<double> q;
  normalized_legendre(sphere_cos_theta(z), l, q);
  const double p = q[static_cast<std::size_t>(l * (l + 1) / 2 + std::abs(m))];
  if (m == 0) return p;
  const double phi = std::arg(z);
  return std::sqrt(2.0) * p * (m > 0 ? std::cos(m * phi) : std::sin(-m * phi));
}

void HarmonicBasis::eval_all(Point z, std::span<double> out) const {
  if (out.size() < size()) throw std::invalid_argument("eval_all: output too small");
  std::vector<double> q;
  normalized_legendre(sphere_cos_theta(z), l_max_, q);
  const double phi = std::arg(z);
  const double root2 = std::sqrt(2.0);
  for (int m = 0; m <= l_max_; ++m) {
    const double c = std::cos(m * phi), s = std::sin(m * phi);
    for (int l = m; l <= l_max_; ++l) {
      const double p = q[static_cast<std::size_t>(l * (l + 1) / 2 + m)];
      if (m == 0) {
        out[index(l, 0)] = p;
      } else {
        out[index(l, m)] = root2 * p * c;
        out[index(l, -m)] = root2 * p * s;
      }
    }
  }
}

double sph_harm_eval(const HarmonicBasis& basis, int l, int m, Point z) {
  return basis.eval(l, m, z);
}

void legendre_values(double t, int l_max, std::span<double> out) {
  out[0] = 1.0;
  if (l_max >= 1) out[1] = t;
  for (int l = 2; l <= l_max; ++l)
    out[static_cast<std::size_t>(l)] =
        ((2.0 * l - 1.0) * t * out[static_cast<std::size_t>(l - 1)] -
         (l - 1.0) * out[static_cast<std::size_t>(l - 2)]) / l;
}

}  // namespace coulomb
