#include "coulomb/energies.hpp"

#include <algorithm>
#include <cmath>

#include "coulomb/quadrature.hpp"

namespace coulomb {

namespace {

void reject_atoms(const Measure& mu, const char* where) {
  if (mu.has_atoms()) throw AtomicMeasure(std::string(where) + ": measure has atoms (infinite energy)");
}

double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

// Angular mean of log(1+|z|^2) over |z - c| = e^{s/2}.
double fs_circle_mean(Point c, double s) {
  if (c == Point(0.0, 0.0)) return softplus(s);
  constexpr int kAngles = 64;
  double acc = 0.0;
  const double r = std::exp(0.5 * s);
  for (int a = 0; a < kAngles; ++a) acc += fs_potential(c + std::polar(r, 2 * kPi * (a + 0.5) / kAngles));
  return acc / kAngles;
}

// Node masses of a lattice measure.
std::vector<double> lattice_masses(const GridFunction& density) {
  const Lattice& g = *density.grid;
  std::vector<double> m(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k)) m[k] = density[k] * g.h * g.h;
  return m;
}

double lattice_E0(const GridFunction& density) {
  const std::vector<double> m = lattice_masses(density);
  LogConvolver conv(density.grid);
  const std::vector<double> u = conv.potential(m);
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) acc += m[k] * u[k];
  return -0.5 * acc;
}

// -sum_{i != j} m_i m_j log|z_i - z_j|^2 plus disk self-cells, on a plane quadrature.
double quadrature_log_pair(const std::vector<Point>& nodes, const std::vector<double>& w,
                           const std::vector<double>& m) {
  double total = 0.0;
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m[j] == 0.0) continue;
      row -= m[j] * std::log(std::norm(nodes[i] - nodes[j]));
    }
    total += 2.0 * m[i] * row + m[i] * m[i] * (0.5 - std::log(w[i] / kPi));
  }
  return total;
}

const Quadrature& pair_quadrature() {
  static const Quadrature q = make_plane_quadrature({1.0, 96, 96, TailRule::inversion_chart});
  return q;
}

}  // namespace

double log_energy_E0(const Measure& mu) {
  reject_atoms(mu, "log_energy_E0");
  if (mu.radial) {
    const RadialMeasure& r = *mu.radial;
    return -r.integrate([&](double s) { return s * r.cumulative(s); });
  }
  if (mu.grid) return lattice_E0(*mu.grid);
  if (mu.density) {
    const Quadrature& q = pair_quadrature();
    std::vector<double> m(q.nodes.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = q.weights[i] * mu.density(q.nodes[i]);
    return 0.5 * quadrature_log_pair(q.nodes, q.weights, m);
  }
  throw std::invalid_argument("log_energy_E0: measure has no usable representation");
}

double weighted_energy(const Potential& phi, const TestFunction& u, const Measure& mu) {
  reject_atoms(mu, "weighted_energy");
  auto rest = [&](Point z) {
    const double v = phi(z);
    return std::isinf(v) ? v : v + u(z) - fs_potential(z);
  };
  if (mu.radial) {
    // E0 + int psi0 and int (phi + u - psi0) are separately finite even for non-compact mu
    const RadialMeasure& r = *mu.radial;
    const double renorm =
        r.integrate([&](double s) { return fs_circle_mean(r.center, s) - s * r.cumulative(s); });
    return renorm + integrate(mu, rest);
  }
  if (mu.grid) {
    const GridFunction& d = *mu.grid;
    const Lattice& g = *d.grid;
    double lin = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.interior(k) && d[k] > 0.0) lin += d[k] * (phi(g.node(k)) + u(g.node(k)));
    return lattice_E0(d) + lin * g.h * g.h;
  }
  if (mu.density) {
    const Quadrature& q = pair_quadrature();
    std::vector<double> m(q.nodes.size());
    double lin = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = q.weights[i] * mu.density(q.nodes[i]);
      if (m[i] != 0.0) lin += m[i] * (phi(q.nodes[i]) + u(q.nodes[i]));
    }
    return 0.5 * quadrature_log_pair(q.nodes, q.weights, m) + lin;
  }
  throw std::invalid_argument("weighted_energy: measure has no usable representation");
}

double weighted_energy(const Potential& phi, const Measure& mu) {
  return weighted_energy(phi, constant_function(0.0), mu);
}

double grid_free_energy(const EquilibriumResult& res) {
  const Lattice& g = res.lattice();
  double lin = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k) && res.density[k] > 0.0)
      lin += res.density[k] * (std::isfinite(res.phi[k]) ? res.phi[k] : res.p_phi[k]);
  return lattice_E0(res.density) + lin * g.h * g.h;
}

double free_energy(const Potential& phi, const TestFunction& u, const EnvelopeOptions& opt) {
  const Potential total = plus(phi, u);
  if (total.radial()) {
    const RadialEnvelope env = radial_envelope(total);
    return weighted_energy(total, radial_measure("mu_phi", env.measure));
  }
  const EquilibriumResult res = project_envelope(total, opt);
  if (res.tail_mass > 0.0 || !std::isfinite(res.free_energy)) {
    // unbounded droplet: F = E(P phi) + F(psi0)
    return energy_functional_E(res.p_phi, sample_fs(res.p_phi.grid)) + 0.5;
  }
  return res.free_energy;
}

double free_energy(const Potential& phi, const EnvelopeOptions& opt) {
  return free_energy(phi, constant_function(0.0), opt);
}

GridFunction sample_fs(const std::shared_ptr<const Lattice>& grid) {
  GridFunction out(grid, 0.0);
  for (std::size_t k = 0; k < grid->size(); ++k) out[k] = fs_potential(grid->node(k));
  return out;
}

double energy_functional_E(const GridFunction& psi, const GridFunction& psi0) {
  const Lattice& g = *psi.grid;
  if (psi0.grid->n != g.n || psi0.grid->h != g.h)
    throw std::invalid_argument("energy_functional_E: lattices differ");
  const GridFunction lp = discrete_laplacian(psi), l0 = discrete_laplacian(psi0);
  const double cell = g.h * g.h / (4.0 * kPi);
  double inner = 0.0, mass_psi = 0.0, mass_0 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double mp = lp[k] * cell, m0 = l0[k] * cell;
    if (mp < -1e-6) throw std::domain_error("energy_functional_E: psi is not subharmonic");
    inner += (psi[k] - psi0[k]) * (mp + m0);
    mass_psi += mp;
    mass_0 += m0;
  }
  inner *= 0.5;
  // beyond the lattice: compare boundary values with the two possible asymptotics
  double a = 0.0, b = 0.0;
  int nb = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind[k] != NodeKind::boundary) continue;
    const Point z = g.node(k);
    a += psi[k] - std::log(std::norm(z));
    b += psi[k] - psi0[k];
    ++nb;
  }
  a /= nb;
  b /= nb;
  const double tail0 = std::max(0.0, 1.0 - mass_0);
  if (std::abs(1.0 - mass_psi) < 1e-3) {
    // psi = log|z|^2 + a beyond an effective radius R with mu0 mass tail0 = 1/(1+R^2);
    // int_{|z|>R} log(1+|z|^-2) dmu0 = 1 - (log(1+T)+1)/(1+T) with T = 1/R^2
    const double t = tail0 / std::max(1e-300, 1.0 - tail0);
    const double exact = 1.0 - (std::log1p(t) + 1.0) * (1.0 - tail0);
    return inner + 0.5 * (a * tail0 - exact);
  }
  return inner + 0.5 * b * (tail0 + std::max(0.0, 1.0 - mass_psi));
}

double dirichlet_J(const TestFunction& u) { return 0.5 * h1_norm_sq(u); }

double dirichlet_J(const EquilibriumResult& a, const EquilibriumResult& b) {
  const Lattice& g = a.lattice();
  if (b.lattice().n != g.n || b.lattice().h != g.h) throw std::invalid_argument("dirichlet_J: lattices differ");
  const double cell = g.h * g.h;
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double dm = (a.density[k] - b.density[k]) * cell;
    if (dm != 0.0) acc += (a.p_phi[k] - b.p_phi[k]) * dm;
  }
  return -0.5 * acc;
}

double entropy(const Measure& mu, const Measure& ref) {
  if (mu.has_atoms()) return kInf;
  if (!ref.density) throw std::invalid_argument("entropy: reference needs a density");
  auto kl = [](double d, double r) {
    if (d <= 0.0) return 0.0;
    if (!(r > 0.0)) return kInf;
    return d * std::log(d / r);
  };
  if (mu.radial) {
    const RadialMeasure& r = *mu.radial;
    const bool ref_radial = (ref.radial && ref.radial->center == r.center) || ref.name == "lebesgue";
    if (ref_radial) {
      // d mu / d lambda = rho(s) / (pi e^s) on the circle of log-radius s
      return r.integrate([&](double s) {
        const double d = r.density(s) / (kPi * std::exp(s));
        const double q = ref.density(r.center + std::exp(0.5 * s));
        if (!(q > 0.0)) return kInf;
        return std::log(d / q);
      });
    }
  }
  if (mu.grid) {
    const GridFunction& d = *mu.grid;
    const Lattice& g = *d.grid;
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.interior(k)) acc += kl(d[k], ref.density(g.node(k)));
    return acc * g.h * g.h;
  }
  if (mu.density) {
    const Quadrature& q = pair_quadrature();
    return q.integrate([&](Point z) { return kl(mu.density(z), ref.density(z)); });
  }
  throw std::invalid_argument("entropy: measure has no usable representation");
}

double mabuchi(const Measure& mu) { return -2.0 * log_energy_E0(mu) + entropy(mu, lebesgue_measure()); }

double orthogonality_residual(const EquilibriumResult& res, const Potential& phi) {
  // raw Laplacian of P phi on every interior node, not the masked density
  const Lattice& g = res.lattice();
  const GridFunction lap = discrete_laplacian(res.p_phi);
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double v = phi(g.node(k));
    if (std::isfinite(v)) acc += (v - res.p_phi[k]) * lap[k] / (4.0 * kPi);
  }
  return std::abs(acc) * g.h * g.h;
}

Psi0Moment psi0_moment(const Measure& mu) {
  Psi0Moment out;
  if (!mu.atoms.empty()) {
    for (const auto& a : mu.atoms) out.value += a.mass * fs_potential(a.location);
  }
  if (mu.radial) {
    const RadialMeasure& r = *mu.radial;
    double top = -kInf;
    for (const auto& iv : r.intervals) top = std::max(top, iv.second);
    auto truncated = [&](double cut) {
      RadialMeasure c = r;
      c.intervals.clear();
      for (const auto& [a, b] : r.intervals)
        if (a < cut) c.intervals.emplace_back(a, std::min(b, cut));
      return c.integrate([&](double s) { return fs_circle_mean(r.center, s); });
    };
    const double full = truncated(top);
    out.value += full;
    if (top <= 40.0) {
      out.finite = std::isfinite(full);
    } else {
      const double half = truncated(40.0);
      out.finite = std::isfinite(full) && std::abs(full - half) <= 1e-6 * (1.0 + std::abs(full));
      if (!out.finite) out.reason = "truncated integrals at s = 40 and s = " + std::to_string(top) + " differ";
    }
    return out;
  }
  if (mu.grid) {
    const GridFunction& d = *mu.grid;
    const Lattice& g = *d.grid;
    double acc = 0.0, edge = 0.0;
    const int ring = std::max(2, g.n / 32);
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const double v = d.at(i, j);
        if (v <= 0.0) continue;
        acc += v * fs_potential(g.node(i, j));
        if (i < ring || j < ring || i >= g.n - ring || j >= g.n - ring) edge += v;
      }
    out.value += acc * g.h * g.h;
    out.finite = edge == 0.0;
    if (!out.finite) out.reason = "lattice measure reaches the boundary ring";
    return out;
  }
  out.reason = "no radial or lattice representation";
  return out;
}

double h_minus1_distance(const Measure& mu1, const Measure& mu2) {
  reject_atoms(mu1, "h_minus1_distance");
  reject_atoms(mu2, "h_minus1_distance");
  if (mu1.radial && mu2.radial && mu1.radial->center == mu2.radial->center) {
    // zero-mass radial difference: int (M1 - M2)^2 ds
    std::vector<double> cuts;
    for (const auto* r : {&*mu1.radial, &*mu2.radial})
      for (const auto& [a, b] : r->intervals) {
        cuts.push_back(a);
        cuts.push_back(b);
      }
    for (const auto* r : {&*mu1.radial, &*mu2.radial}) cuts.insert(cuts.end(), r->breaks.begin(), r->breaks.end());
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (!(b > a)) continue;
      const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.1)));
      acc += integrate(
          [&](double s) {
            const double d = mu1.radial->cumulative(s) - mu2.radial->cumulative(s);
            return d * d;
          },
          a, b, panels, 10);
    }
    return std::sqrt(std::max(0.0, acc));
  }
  if (mu1.grid && mu2.grid && mu1.grid->grid->n == mu2.grid->grid->n && mu1.grid->grid->h == mu2.grid->grid->h) {
    GridFunction diff = *mu1.grid;
    for (std::size_t k = 0; k < diff.values.size(); ++k) diff[k] -= (*mu2.grid)[k];
    return std::sqrt(std::max(0.0, 2.0 * lattice_E0(diff)));
  }
  if (mu1.grid || mu2.grid) {
    const auto grid = mu1.grid ? mu1.grid->grid : mu2.grid->grid;
    GridFunction diff = rasterize(mu1, grid);
    const GridFunction other = rasterize(mu2, grid);
    for (std::size_t k = 0; k < diff.values.size(); ++k) diff[k] -= other[k];
    return std::sqrt(std::max(0.0, 2.0 * lattice_E0(diff)));
  }
  if (mu1.density && mu2.density) {
    const Quadrature& q = pair_quadrature();
    std::vector<double> m(q.nodes.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      m[i] = q.weights[i] * (mu1.density(q.nodes[i]) - mu2.density(q.nodes[i]));
    return std::sqrt(std::max(0.0, quadrature_log_pair(q.nodes, q.weights, m)));
  }
  throw std::invalid_argument("h_minus1_distance: incompatible representations");
}

HarmonicExtension harmonic_extension(const TestFunction& u, const EquilibriumResult& res) {
  const auto grid = res.p_phi.grid;
  const Lattice& g = *grid;
  const std::size_t n = static_cast<std::size_t>(g.n);
  const auto [r_in, r_drop] = res.droplet_radii();
  (void)r_in;
  if (!std::isfinite(r_drop) || r_drop <= 0.0) throw std::invalid_argument("harmonic_extension: empty droplet");
  const double rho = std::max(0.8 * g.radius, 0.5 * (r_drop + g.radius));
  if (rho >= g.radius - 2 * g.h) throw std::invalid_argument("harmonic_extension: droplet too close to the grid edge");
  constexpr int K = 32, M = 256;
  std::vector<double> v(g.size(), 0.0);
  std::vector<std::uint8_t> fixed(g.size(), 0);
  double mean_u = 0.0;
  int cnt = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (res.support_mask[k]) {
      v[k] = u(g.node(k));
      fixed[k] = 1;
      mean_u += v[k];
      ++cnt;
    }
  mean_u /= std::max(1, cnt);
  std::vector<double> a(K + 1, 0.0), b(K + 1, 0.0);
  a[0] = mean_u;
  std::vector<std::size_t> bnodes;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.kind[k] == NodeKind::boundary) bnodes.push_back(k);
  auto exterior = [&](Point z) {
    const double r = std::abs(z), th = std::arg(z);
    double val = a[0];
    double q = 1.0;
    for (int k = 1; k <= K; ++k) {
      q *= rho / r;
      val += (a[static_cast<std::size_t>(k)] * std::cos(k * th) + b[static_cast<std::size_t>(k)] * std::sin(k * th)) * q;
    }
    return val;
  };
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k) && !fixed[k]) v[k] = mean_u;
  const double omega = 2.0 / (1.0 + std::sin(kPi * g.h / (2.0 * g.radius)));
  GridFunction field(grid, 0.0);
  for (int round = 0; round < 200; ++round) {
    for (std::size_t k : bnodes) v[k] = exterior(g.node(k));
    for (long it = 0; it < 200000; ++it) {
      double maxd = 0.0;
      for (int j = 0; j < g.n; ++j)
        for (int i = g.row_begin[static_cast<std::size_t>(j)]; i < g.row_end[static_cast<std::size_t>(j)]; ++i) {
          const std::size_t k = static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i);
          if (fixed[k]) continue;
          const double avg = 0.25 * (v[k - 1] + v[k + 1] + v[k - n] + v[k + n]);
          const double d = omega * (avg - v[k]);
          v[k] += d;
          maxd = std::max(maxd, std::abs(d));
        }
      if (maxd < 1e-12) break;
      if (it == 199999) throw ConvergenceFailure("harmonic_extension: Dirichlet solve did not converge");
    }
    field.values = v;
    std::vector<double> na(K + 1, 0.0), nb(K + 1, 0.0);
    for (int m = 0; m < M; ++m) {
      const double th = 2 * kPi * (m + 0.5) / M;
      const double val = field.interpolate(std::polar(rho, th));
      na[0] += val / M;
      for (int k = 1; k <= K; ++k) {
        na[static_cast<std::size_t>(k)] += 2.0 * val * std::cos(k * th) / M;
        nb[static_cast<std::size_t>(k)] += 2.0 * val * std::sin(k * th) / M;
      }
    }
    double change = 0.0;
    for (int k = 0; k <= K; ++k)
      change = std::max({change, std::abs(na[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k)]),
                         std::abs(nb[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)])});
    a = na;
    b = nb;
    if (change < 1e-10) break;
  }
  for (std::size_t k : bnodes) v[k] = exterior(g.node(k));
  field.values = v;
  // Dirichlet energy: lattice edges between non-outside nodes, plus the exterior of the outer circle
  double edges = 0.0;
  for (int j = 0; j + 1 < g.n; ++j)
    for (int i = 0; i + 1 < g.n; ++i) {
      const std::size_t k = g.index(i, j);
      if (g.kind[k] == NodeKind::outside) continue;
      if (g.kind[k + 1] != NodeKind::outside) edges += (v[k + 1] - v[k]) * (v[k + 1] - v[k]);
      if (g.kind[k + n] != NodeKind::outside) edges += (v[k + n] - v[k]) * (v[k + n] - v[k]);
    }
  const double r_out = g.radius + 0.5 * g.h;
  double ext = 0.0;
  for (int k = 1; k <= K; ++k) {
    const double q = std::pow(rho / r_out, 2 * k);
    ext += kPi * k * (a[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(k)] +
                      b[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)]) * q;
  }
  HarmonicExtension out{test_function(
                            u.name() + "^S",
                            [field, exterior_a = a, exterior_b = b, rho, R = g.radius](Point z) {
                              if (std::abs(z) < R) {
                                const double val = field.interpolate(z);
                                if (!std::isnan(val)) return val;
                              }
                              const double r = std::abs(z), th = std::arg(z);
                              double val = exterior_a[0], q = 1.0;
                              for (int k = 1; k <= K; ++k) {
                                q *= rho / r;
                                val += (exterior_a[static_cast<std::size_t>(k)] * std::cos(k * th) +
                                        exterior_b[static_cast<std::size_t>(k)] * std::sin(k * th)) * q;
                              }
                              return val;
                            }),
                        (edges + ext) / (4.0 * kPi)};
  return out;
}

}  // namespace coulomb
