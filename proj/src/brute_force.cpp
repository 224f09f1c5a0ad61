#include "coulomb/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coulomb/energies.hpp"
#include "coulomb/parallel.hpp"
#include "coulomb/quadrature.hpp"

namespace coulomb {

namespace {

struct Vec3 {
  double x, y, z;
};

Vec3 unit(double polar, double azimuth) {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
}

double dist_sq(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// stereographic chart with the north pole at z = 0
Point to_plane(const Vec3& v) {
  const double d = std::max(1.0 + v.z, 1e-150);
  return {v.x / d, v.y / d};
}

// one-point factor (1+|z|^2)^{beta(N-1)+2} e^{-beta V(z)} in log form
struct Weight {
  Potential total;
  double k;
  double bm;

  double log_w(const Vec3& v) const {
    const Point z = to_plane(v);
    const double val = total(z);
    if (val == kInf) return -kInf;
    return k * std::log1p(std::norm(z)) - bm * val;
  }
};

struct Node {
  Vec3 x;
  double w;  // quadrature weight times sin(polar) / 4 times the one-point factor
};

std::vector<Node> sphere_nodes(const Weight& wt, int n, bool single_meridian) {
  const GaussRule polar = gauss_legendre(n, 0.0, kPi);
  const int m = single_meridian ? 1 : 2 * n;
  std::vector<Node> out;
  out.reserve(static_cast<std::size_t>(n * m));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) {
      const Vec3 x = unit(polar.nodes[static_cast<std::size_t>(i)], 2 * kPi * a / m);
      const double lw = wt.log_w(x);
      if (lw == -kInf) continue;
      out.push_back({x, polar.weights[static_cast<std::size_t>(i)] * (2 * kPi / m) *
                            std::sin(polar.nodes[static_cast<std::size_t>(i)]) / 4.0 * std::exp(lw)});
    }
  return out;
}

// radial: x1 on one meridian carrying the full longitude weight 2 pi
double integral_at(const Weight& wt, int n_points, double beta, int n, bool radial) {
  const std::vector<Node> outer = sphere_nodes(wt, n, radial);
  if (n_points == 1) {
    double acc = 0.0;
    for (const auto& o : outer) acc += o.w;
    return acc;
  }
  // geodesic polar coordinates about x1: gamma = pi u^2
  const GaussRule ur = gauss_legendre(n, 0.0, 1.0);
  const int n_alpha = 2 * n;
  const std::vector<Node> third = n_points == 3 ? sphere_nodes(wt, n, false) : std::vector<Node>{};
  std::vector<double> partial(outer.size(), 0.0);
  parallel_for(outer.size(), [&](std::size_t oi) {
    const Vec3 x1 = outer[oi].x;
    Vec3 e1 = std::abs(x1.z) < 0.9 ? Vec3{-x1.y, x1.x, 0.0} : Vec3{0.0, -x1.z, x1.y};
    const double ne = std::sqrt(e1.x * e1.x + e1.y * e1.y + e1.z * e1.z);
    e1 = {e1.x / ne, e1.y / ne, e1.z / ne};
    const Vec3 e2{x1.y * e1.z - x1.z * e1.y, x1.z * e1.x - x1.x * e1.z, x1.x * e1.y - x1.y * e1.x};
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = ur.nodes[static_cast<std::size_t>(i)];
      const double g = kPi * u * u;
      const double cg = std::cos(g), sg = std::sin(g);
      const double pair12 = std::pow(std::sin(0.5 * g), 2.0 * beta);
      const double wg = ur.weights[static_cast<std::size_t>(i)] * 2 * kPi * u * sg / 4.0 * (2 * kPi / n_alpha);
      for (int a = 0; a < n_alpha; ++a) {
        const double ca = std::cos(2 * kPi * a / n_alpha), sa = std::sin(2 * kPi * a / n_alpha);
        const Vec3 x2{cg * x1.x + sg * (ca * e1.x + sa * e2.x), cg * x1.y + sg * (ca * e1.y + sa * e2.y),
                      cg * x1.z + sg * (ca * e1.z + sa * e2.z)};
        const double lw = wt.log_w(x2);
        if (lw == -kInf) continue;
        double f = wg * std::exp(lw) * pair12;
        if (n_points == 3) {
          double s3 = 0.0;
          for (const auto& t : third)
            s3 += t.w * std::pow(dist_sq(x1, t.x) * dist_sq(x2, t.x) / 16.0, beta);
          f *= s3;
        }
        acc += f;
      }
    }
    partial[oi] = outer[oi].w * acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace

PartitionValue brute_force_log_z(const Potential& phi, const TestFunction& u, int n, double beta,
                                 Convention convention, int base_nodes) {
  if (n < 1 || n > 3) throw std::invalid_argument("brute_force_log_z: need 1 <= n <= 3");
  if (!(beta > 0.0)) throw std::invalid_argument("brute_force_log_z: beta must be positive");
  const Potential total = plus(phi, u);
  const double m = weight_exponent(convention, n, beta);
  const Weight wt{total, beta * (n - 1) + 2.0, beta * m};
  const bool radial = total.radial() && total.radial()->center == Point(0.0, 0.0);
  int n0 = base_nodes;
  if (n0 <= 0) {
    static const int radial_default[] = {0, 32, 24, 6};
    static const int general_default[] = {0, 24, 12, 4};
    n0 = radial ? radial_default[n] : general_default[n];
  }
  const double i1 = integral_at(wt, n, beta, n0, radial);
  const double i2 = integral_at(wt, n, beta, 2 * n0, radial);
  const double i4 = integral_at(wt, n, beta, 4 * n0, radial);
  if (!(i4 > 0.0) || !std::isfinite(i4)) throw std::domain_error("brute_force_log_z: quadrature diverged");
  PartitionValue v;
  v.n = n;
  v.beta = beta;
  v.convention = convention;
  v.method = PartitionMethod::brute_quadrature;
  v.log_z = std::log(i4);
  double bar = std::abs(std::log(i4) - std::log(i2));
  const double d1 = i2 - i1, d2 = i4 - i2;
  if (d2 != 0.0 && std::abs(d1) > std::abs(d2)) {
    const double extrapolated = i4 + d2 * d2 / (d1 - d2);
    if (extrapolated > 0.0) bar = std::max(bar, std::abs(std::log(extrapolated) - std::log(i4)));
  }
  v.error_bar = bar;
  return v;
}

PartitionValue brute_force_log_z(const Potential& phi, int n, double beta, Convention convention,
                                 int base_nodes) {
  return brute_force_log_z(phi, constant_function(0.0), n, beta, convention, base_nodes);
}

double gibbs_lower_bound(const Potential& phi, int n, double beta, Convention convention, const Measure& nu) {
  const double N = n;
  const double m = weight_exponent(convention, n, beta);
  const double mean_h = N * (N - 1.0) * log_energy_E0(nu) + N * m * integrate(nu, [&](Point z) { return phi(z); });
  return -mean_h - N / beta * entropy(nu, lebesgue_measure());
}

int SphereCells::cell_of(Point z) const {
  const double polar = 2.0 * std::atan(std::abs(z));
  const int band = static_cast<int>(std::upper_bound(polar_breaks.begin(), polar_breaks.end(), polar) -
                                    polar_breaks.begin());
  double az = std::arg(z);
  if (az < 0.0) az += 2 * kPi;
  const int sector = std::min(sectors - 1, static_cast<int>(az / (2 * kPi) * sectors));
  return band * sectors + sector;
}

std::vector<double> two_point_cell_probabilities(const Potential& phi, double beta, Convention convention,
                                                 const SphereCells& cells, int nodes) {
  const double m = weight_exponent(convention, 2, beta);
  const Weight wt{phi, beta + 2.0, beta * m};
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), cells.polar_breaks.begin(), cells.polar_breaks.end());
  edges.push_back(kPi);
  const int C = cells.count();
  // node lists per cell
  std::vector<std::vector<Node>> per_cell(static_cast<std::size_t>(C));
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const GaussRule pr = gauss_legendre(nodes, edges[b], edges[b + 1]);
    for (int sct = 0; sct < cells.sectors; ++sct) {
      const double a0 = 2 * kPi * sct / cells.sectors, a1 = 2 * kPi * (sct + 1) / cells.sectors;
      const GaussRule ar = gauss_legendre(nodes, a0, a1);
      auto& list = per_cell[b * static_cast<std::size_t>(cells.sectors) + static_cast<std::size_t>(sct)];
      for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) {
          const Vec3 x = unit(pr.nodes[static_cast<std::size_t>(i)], ar.nodes[static_cast<std::size_t>(j)]);
          const double lw = wt.log_w(x);
          if (lw == -kInf) continue;
          list.push_back({x, pr.weights[static_cast<std::size_t>(i)] * ar.weights[static_cast<std::size_t>(j)] *
                                 std::sin(pr.nodes[static_cast<std::size_t>(i)]) / 4.0 * std::exp(lw)});
        }
    }
  }
  std::vector<double> P(static_cast<std::size_t>(C * C), 0.0);
  parallel_for(static_cast<std::size_t>(C), [&](std::size_t a) {
    for (int b = 0; b < C; ++b) {
      double acc = 0.0;
      for (const auto& p : per_cell[a])
        for (const auto& q : per_cell[static_cast<std::size_t>(b)])
          acc += p.w * q.w * std::pow(dist_sq(p.x, q.x) / 4.0, beta);
      P[a * static_cast<std::size_t>(C) + static_cast<std::size_t>(b)] = acc;
    }
  });
  double total = 0.0;
  for (double v : P) total += v;
  for (double& v : P) v /= total;
  return P;
}

}  // namespace coulomb
