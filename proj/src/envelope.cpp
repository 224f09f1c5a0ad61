#include "coulomb/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "coulomb/energies.hpp"

namespace coulomb {

namespace {

constexpr double kSMax = 80.0;

// Root of df(s) = target in [a, b] by bisection; df is nondecreasing there.
double slope_root(const std::function<double(double)>& df, double target, double a, double b) {
  double fa = df(a) - target;
  if (fa >= 0.0) return a;
  if (df(b) - target <= 0.0) return b;
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    if (df(m) - target < 0.0) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

RadialEnvelope radial_envelope(const Potential& phi) {
  if (!phi.radial()) throw std::invalid_argument("radial_envelope: potential has no radial profile");
  const RadialProfile prof = *phi.radial();
  const double ds = 0.005;
  const int n = static_cast<int>(2 * kSMax / ds) + 1;
  std::vector<double> s(static_cast<std::size_t>(n)), f(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    s[static_cast<std::size_t>(k)] = -kSMax + k * ds;
    f[static_cast<std::size_t>(k)] = prof.f(s[static_cast<std::size_t>(k)]);
  }
  // lower convex hull (monotone chain)
  std::vector<int> hull;
  for (int k = 0; k < n; ++k) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double cross = (s[b] - s[a]) * (f[k] - f[a]) - (f[b] - f[a]) * (s[k] - s[a]);
      if (cross <= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(k);
  }
  auto seg_slope = [&](std::size_t i) {
    return (f[hull[i + 1]] - f[hull[i]]) / (s[hull[i + 1]] - s[hull[i]]);
  };
  RadialEnvelope env;
  env.center = prof.center;
  // first hull vertex where the outgoing slope is >= 0, last where incoming slope is <= 1
  std::size_t first = 0, last = hull.size() - 1;
  constexpr double kSlopeTol = 1e-9;
  while (first + 1 < hull.size() && seg_slope(first) < -kSlopeTol) ++first;
  while (last > first && seg_slope(last - 1) > 1.0 + kSlopeTol) --last;
  env.left_flat = first > 0;
  env.right_log = last + 1 < hull.size();
  double s_left = s[hull[first]], s_right = s[hull[last]];
  if (env.left_flat) s_left = slope_root(prof.df, 0.0, std::max(-kSMax, s_left - ds), std::min(kSMax, s_left + ds));
  if (env.right_log) s_right = slope_root(prof.df, 1.0, std::max(-kSMax, s_right - ds), std::min(kSMax, s_right + ds));
  env.s_left = s_left;
  env.s_right = s_right;

  // contact runs and chords between first and last
  std::vector<std::pair<double, double>> contact, chords;
  double run_start = s_left;
  for (std::size_t i = first; i < last; ++i) {
    if (hull[i + 1] - hull[i] > 1) {
      // skip gaps that are round-off in nearly linear stretches
      const int ia = hull[i], ib = hull[i + 1];
      double dev = 0.0;
      for (int k = ia + 1; k < ib; ++k)
        dev = std::max(dev, f[k] - (f[ia] + (f[ib] - f[ia]) * (s[k] - s[ia]) / (s[ib] - s[ia])));
      if (dev < 1e-11 * std::max(1.0, std::abs(f[ib])) ) continue;
      double a = s[ia], b = s[ib];
      // refine the bitangent: f'(a) = f'(b) = (f(b) - f(a)) / (b - a)
      for (int it = 0; it < 50; ++it) {
        const double fa = prof.f(a), fb = prof.f(b), da = prof.df(a), db = prof.df(b);
        const double F1 = da - db, F2 = da * (b - a) - (fb - fa);
        const double J11 = prof.d2f(a), J12 = -prof.d2f(b), J21 = prof.d2f(a) * (b - a), J22 = da - db;
        const double det = J11 * J22 - J12 * J21;
        if (!(std::abs(det) > 0.0)) break;
        const double da_ = (F1 * J22 - F2 * J12) / det, db_ = (J11 * F2 - J21 * F1) / det;
        if (std::abs(da_) > 4 * ds || std::abs(db_) > 4 * ds) break;
        a -= da_;
        b -= db_;
        if (std::abs(da_) + std::abs(db_) < 1e-14) break;
      }
      if (!(a >= s[ia] - 4 * ds && a < b && a > run_start)) {
        a = s[ia];
        b = s[ib];
      }
      if (a > run_start) contact.push_back({run_start, a});
      chords.push_back({a, b});
      run_start = b;
    }
  }
  if (s_right > run_start) contact.push_back({run_start, s_right});
  env.contact = contact;

  const double f_left = prof.f(s_left);
  const double c_right = env.right_log ? prof.f(s_right) - s_right : prof.f(kSMax) - kSMax;
  env.robin_constant = c_right;
  const bool left_flat = env.left_flat, right_log = env.right_log;
  const auto in_contact = [contact](double x) {
    for (const auto& [a, b] : contact)
      if (x >= a && x <= b) return true;
    return false;
  };
  env.g = [=](double x) {
    if (left_flat && x <= s_left) return f_left;
    if (right_log && x >= s_right) return x + c_right;
    for (const auto& [a, b] : chords)
      if (x > a && x < b) {
        const double fa = prof.f(a), fb = prof.f(b);
        return fa + (fb - fa) * (x - a) / (b - a);
      }
    return prof.f(x);
  };
  RadialMeasure m;
  m.center = prof.center;
  m.intervals = contact;
  m.breaks = prof.breaks;
  m.density = [prof, in_contact](double x) { return in_contact(x) ? std::max(0.0, prof.d2f(x)) : 0.0; };
  m.cumulative = [=](double x) {
    if (left_flat && x <= s_left) return 0.0;
    if (right_log && x >= s_right) return 1.0;
    for (const auto& [a, b] : chords)
      if (x > a && x < b) return prof.df(a);
    return prof.df(std::clamp(x, -kSMax, kSMax));
  };
  m.mass = (right_log ? 1.0 : prof.df(kSMax)) - (left_flat ? 0.0 : prof.df(-kSMax));
  env.measure = std::move(m);
  return env;
}

// ---------------------------------------------------------------------------
// projected SOR

namespace {

struct Level {
  std::shared_ptr<const Lattice> grid;
  std::vector<double> phi, psi;
  std::vector<std::size_t> bnodes;
  std::vector<double> logr2, wcorr;  // per boundary node
  double omega = 1.0;
  long sweeps = 0;
};

Level make_level(const Potential& phi, std::shared_ptr<const Lattice> grid) {
  Level L;
  L.grid = std::move(grid);
  const Lattice& g = *L.grid;
  L.phi.assign(g.size(), kInf);
  L.psi.assign(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind[k] == NodeKind::outside) continue;
    L.phi[k] = phi(g.node(k));
    if (g.kind[k] == NodeKind::boundary) {
      L.bnodes.push_back(k);
      L.logr2.push_back(std::log(std::norm(g.node(k))));
    }
  }
  L.wcorr.assign(L.bnodes.size(), 0.0);
  L.omega = 2.0 / (1.0 + std::sin(kPi * g.h / (2.0 * g.radius)));
  return L;
}

void set_boundary(Level& L, double c) {
  for (std::size_t b = 0; b < L.bnodes.size(); ++b)
    L.psi[L.bnodes[b]] = std::min(L.phi[L.bnodes[b]], c + L.logr2[b] + L.wcorr[b]);
}

double full_contact_constant(const Level& L) {
  double c = -kInf;
  for (std::size_t b = 0; b < L.bnodes.size(); ++b)
    if (std::isfinite(L.phi[L.bnodes[b]])) c = std::max(c, L.phi[L.bnodes[b]] - L.logr2[b] - L.wcorr[b]);
  return c;
}

void relax(Level& L, double tol, long max_sweeps) {
  const Lattice& g = *L.grid;
  const std::size_t n = static_cast<std::size_t>(g.n);
  double* p = L.psi.data();
  const double* f = L.phi.data();
  const double w = L.omega;
  for (long it = 0; it < max_sweeps; ++it) {
    double maxd = 0.0;
    for (int j = 0; j < g.n; ++j) {
      const std::size_t row = static_cast<std::size_t>(j) * n;
      for (int i = g.row_begin[static_cast<std::size_t>(j)]; i < g.row_end[static_cast<std::size_t>(j)]; ++i) {
        const std::size_t k = row + static_cast<std::size_t>(i);
        const double avg = 0.25 * (p[k - 1] + p[k + 1] + p[k - n] + p[k + n]);
        double v = p[k] + w * (avg - p[k]);
        if (v > f[k]) v = f[k];
        maxd = std::max(maxd, std::abs(v - p[k]));
        p[k] = v;
      }
    }
    ++L.sweeps;
    if (maxd < tol) return;
  }
  throw ConvergenceFailure("project_envelope: sweep budget exhausted");
}

double grid_mass(const Level& L) {
  const Lattice& g = *L.grid;
  const std::size_t n = static_cast<std::size_t>(g.n);
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k)) acc += L.psi[k - 1] + L.psi[k + 1] + L.psi[k - n] + L.psi[k + n] - 4.0 * L.psi[k];
  return acc / (4.0 * kPi);
}

// Multipole correction -2 Re sum_k M_k / (k z^k) at the boundary nodes.
double refresh_multipoles(Level& L, int terms) {
  const Lattice& g = *L.grid;
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<std::complex<double>> moments(static_cast<std::size_t>(terms) + 1, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double m = (L.psi[k - 1] + L.psi[k + 1] + L.psi[k - n] + L.psi[k + n] - 4.0 * L.psi[k]) / (4.0 * kPi);
    if (m == 0.0) continue;
    const Point z = g.node(k);
    Point zp = 1.0;
    for (int t = 1; t <= terms; ++t) {
      zp *= z;
      moments[static_cast<std::size_t>(t)] += m * zp;
    }
  }
  double change = 0.0;
  for (std::size_t b = 0; b < L.bnodes.size(); ++b) {
    const Point iz = 1.0 / g.node(L.bnodes[b]);
    Point zp = 1.0;
    double w = 0.0;
    for (int t = 1; t <= terms; ++t) {
      zp *= iz;
      w -= 2.0 * std::real(moments[static_cast<std::size_t>(t)] * zp) / t;
    }
    change = std::max(change, std::abs(w - L.wcorr[b]));
    L.wcorr[b] = w;
  }
  return change;
}

struct Solve {
  double c = 0.0;
  double mass = 0.0;
  double slope = 1.0;  // d mass / d c at the root
  bool tail = false;
};

// Find c with grid mass 1 (or detect that even full boundary contact gives mass < 1).
Solve solve_constant(Level& L, double c_guess, double slope_guess, double sweep_tol, double mass_tol,
                     long max_sweeps) {
  const double c_full = full_contact_constant(L);
  std::vector<double> cs, ms;
  std::vector<std::vector<double>> psis;
  auto eval = [&](double c) {
    if (psis.size() >= 2) {
      // extrapolate the solution linearly in c from the two latest solves
      const auto& pa = psis[psis.size() - 2];
      const auto& pb = psis.back();
      const double ca = cs[cs.size() - 2], cb = cs.back();
      if (cb != ca) {
        const double t = (c - cb) / (cb - ca);
        for (std::size_t k = 0; k < L.psi.size(); ++k)
          L.psi[k] = std::min(L.phi[k], pb[k] + t * (pb[k] - pa[k]));
      }
    }
    set_boundary(L, c);
    relax(L, sweep_tol, max_sweeps);
    const double m = grid_mass(L);
    cs.push_back(c);
    ms.push_back(m);
    psis.push_back(L.psi);
    if (psis.size() > 2) psis.erase(psis.begin());
    return m;
  };
  Solve out;
  if (std::isfinite(c_full) && c_guess >= c_full) c_guess = c_full - 1e-3;
  double m = eval(c_guess);
  double c = c_guess;
  if (std::abs(m - 1.0) < mass_tol) return {c, m, slope_guess, false};
  // bracket
  double lo = -kInf, hi = kInf, m_lo = 0.0, m_hi = 0.0;
  if (m < 1.0) { lo = c; m_lo = m; } else { hi = c; m_hi = m; }
  double slope = slope_guess > 0.0 ? slope_guess : 1.0;
  for (int it = 0; it < 200; ++it) {
    double next;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      // secant clipped to the bracket, bisection when it stalls
      next = c + (1.0 - m) / slope;
      const double width = hi - lo;
      if (!(next > lo + 0.02 * width && next < hi - 0.02 * width)) next = 0.5 * (lo + hi);
    } else {
      double step = (1.0 - m) / slope;
      step = std::clamp(step, -2.0, 2.0);
      if (std::abs(step) < 1e-6) step = step < 0 ? -1e-6 : 1e-6;
      next = c + step;
      if (std::isfinite(c_full) && next >= c_full) {
        // probe full contact: if even that is short of mass 1 the droplet leaks
        const double mf = eval(c_full);
        if (mf <= 1.0 + mass_tol) return {c_full, mf, slope, true};
        hi = c_full;
        m_hi = mf;
        next = 0.5 * (c + c_full);
      }
    }
    const double mn = eval(next);
    if (std::abs(next - c) > 0.0 && std::abs(mn - m) > 1e-14) slope = std::max((mn - m) / (next - c), 1e-8);
    c = next;
    m = mn;
    if (std::abs(m - 1.0) < mass_tol) return {c, m, slope, false};
    if (m < 1.0) { lo = c; m_lo = m; } else { hi = c; m_hi = m; }
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo < 1e-14) return {c, m, slope, false};
  }
  (void)m_lo;
  (void)m_hi;
  throw ConvergenceFailure("project_envelope: mass normalization did not converge");
}

}  // namespace

double solver_radius(const Potential& phi, const EnvelopeOptions& opt) {
  if (opt.lattice) return opt.lattice->radius;
  if (opt.radius > 0.0) return opt.radius;
  try {
    return 1.5 * outer_radius_bound(phi, 1.0);
  } catch (const std::exception&) {
    return opt.fallback_radius;
  }
}

std::pair<double, double> EquilibriumResult::droplet_radii(Point c) const {
  const Lattice& g = lattice();
  double lo = kInf, hi = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (support_mask[k]) {
      const double r = std::abs(g.node(k) - c);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  return {lo, hi};
}

EquilibriumResult project_envelope(const Potential& phi, const EnvelopeOptions& opt) {
  if (phi.growth() == GrowthClass::Inadmissible)
    throw InadmissiblePotential("project_envelope: potential is not admissible");
  const double radius = solver_radius(phi, opt);
  const double h = opt.lattice ? opt.lattice->h : opt.h;
  std::vector<double> hs{h};
  while (hs.back() * 2.0 <= opt.coarsest_h * (1 + 1e-12) && radius / (hs.back() * 2.0) >= 8.0)
    hs.push_back(hs.back() * 2.0);
  std::reverse(hs.begin(), hs.end());

  double c = 0.0, slope = 1.0;
  bool have_c = false;
  Level prev;
  Solve sol;
  long total_sweeps = 0;
  for (std::size_t li = 0; li < hs.size(); ++li) {
    const bool finest = li + 1 == hs.size();
    auto grid = (finest && opt.lattice) ? opt.lattice
                                        : std::make_shared<const Lattice>(make_lattice(hs[li], radius));
    Level L = make_level(phi, grid);
    const Lattice& g = *grid;
    if (!have_c) {
      const double cf = full_contact_constant(L);
      c = std::isfinite(cf) ? std::min(cf - 1e-3, 0.0) : 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (g.kind[k] != NodeKind::outside)
          L.psi[k] = std::min(L.phi[k], c + std::log(std::norm(g.node(k)) + g.h * g.h));
    } else {
      // interpolate the coarse solution; the coarse lattice's outside ring holds the log extension
      GridFunction coarse(prev.grid, 0.0);
      coarse.values = prev.psi;
      const Lattice& cg = *prev.grid;
      for (std::size_t k = 0; k < cg.size(); ++k)
        if (cg.kind[k] == NodeKind::outside) coarse[k] = c + std::log(std::max(std::norm(cg.node(k)), 1e-300));
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.kind[k] == NodeKind::outside) continue;
        double v = coarse.interpolate(g.node(k));
        if (std::isnan(v)) v = c + std::log(std::norm(g.node(k)));
        L.psi[k] = std::min(L.phi[k], v);
      }
      refresh_multipoles(L, opt.multipole_terms);
    }
    const double sweep_tol = finest ? 1e-11 : 1e-9;
    const double mass_tol = finest ? opt.mass_tol : std::max(opt.mass_tol, 1e-7);
    for (int round = 0; round < 8; ++round) {
      sol = solve_constant(L, c, slope, sweep_tol, mass_tol, opt.max_sweeps);
      c = sol.c;
      slope = sol.slope;
      const double change = refresh_multipoles(L, opt.multipole_terms);
      if (change < (finest ? 1e-9 : 1e-7)) break;
    }
    have_c = true;
    total_sweeps += L.sweeps;
    prev = std::move(L);
  }

  // assemble the result on the finest level
  Level& L = prev;
  const auto grid = L.grid;
  const Lattice& g = *grid;
  const std::size_t n = static_cast<std::size_t>(g.n);
  EquilibriumResult res;
  res.p_phi = GridFunction(grid, 0.0);
  res.p_phi.values = L.psi;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.kind[k] == NodeKind::outside) res.p_phi[k] = c + std::log(std::max(std::norm(g.node(k)), 1e-300));
  res.phi = GridFunction(grid, kInf);
  res.phi.values = L.phi;
  res.density = GridFunction(grid, 0.0);
  res.support_mask.assign(g.size(), 0);
  res.robin_constant = c;
  res.sweeps = total_sweeps;

  double lap_sup = 0.0;
  std::vector<double> lap_phi(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double v = phi.laplacian(g.node(k));
    if (std::isfinite(v)) {
      lap_phi[k] = v;
      lap_sup = std::max(lap_sup, std::abs(v));
    }
  }
  res.tol = opt.tol > 0.0 ? opt.tol : 10.0 * g.h * g.h * lap_sup;

  double mass = 0.0, comp = 0.0, orth = 0.0;
  const double ih2 = 1.0 / (g.h * g.h);
  // iteration noise of the harmonic part sits far below this
  const double floor = 1e-7 * lap_sup / (4.0 * kPi);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    const double nb = L.psi[k - 1] + L.psi[k + 1] + L.psi[k - n] + L.psi[k + n];
    const double avg = 0.25 * nb;
    comp = std::max(comp, std::abs(std::min(L.phi[k] - L.psi[k], avg - L.psi[k])));
    const double raw = (nb - 4.0 * L.psi[k]) * ih2 / (4.0 * kPi);
    if (std::isfinite(L.phi[k])) orth += (L.phi[k] - L.psi[k]) * raw * g.h * g.h;
    double dens = std::max(0.0, raw);
    if (L.phi[k] - L.psi[k] <= res.tol && dens > floor)
      res.support_mask[k] = 1;
    else
      dens = 0.0;
    res.density[k] = dens;
    mass += dens * g.h * g.h;
  }
  res.tail_mass = sol.tail ? std::max(0.0, 1.0 - mass) : 0.0;
  res.residuals.complementarity = comp;
  res.residuals.mass = std::abs(mass + res.tail_mass - 1.0);
  res.residuals.orthogonality = std::abs(orth);
  if (!sol.tail) res.free_energy = grid_free_energy(res);
  return res;
}

}  // namespace coulomb
