#include "coulomb/measure.hpp"

#include <cmath>

#include "coulomb/quadrature.hpp"

namespace coulomb {

namespace {

constexpr double kSMax = 80.0;

double logistic(double s) { return s > 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }

double angular_mean(const std::function<double(Point)>& f, Point c, double r) {
  constexpr int kAngles = 64;
  double acc = 0.0;
  for (int a = 0; a < kAngles; ++a) acc += f(c + std::polar(r, 2 * kPi * (a + 0.5) / kAngles));
  return acc / kAngles;
}

}  // namespace

double RadialMeasure::integrate(const std::function<double(double)>& g) const {
  double acc = 0.0;
  for (const auto& [a, b] : intervals) {
    if (!(b > a)) continue;
    acc += integrate_split(
        [&](double s) {
          const double d = density(s);
          return d != 0.0 ? d * g(s) : 0.0;
        },
        a, b, breaks, 0.25, 10);
  }
  return acc;
}

double Measure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  if (radial) return m + radial->mass;
  if (grid) return m + grid_integral(*grid);
  if (density) return m + reference_quadrature().integrate(density);
  return m;
}

Measure lebesgue_measure() {
  Measure mu;
  mu.name = "lebesgue";
  mu.density = [](Point) { return 1.0; };
  return mu;
}

Measure mu0_measure() {
  RadialMeasure r;
  r.intervals = {{-kSMax, kSMax}};
  r.density = [](double s) {
    const double c = std::cosh(0.5 * s);
    return 0.25 / (c * c);
  };
  r.cumulative = logistic;
  Measure mu = radial_measure("mu0", std::move(r));
  mu.density = mu0_density;
  return mu;
}

Measure uniform_disk(double radius, Point center) {
  if (!(radius > 0.0)) throw std::invalid_argument("uniform_disk: radius must be positive");
  const double r2 = radius * radius;
  const double top = std::log(r2);
  RadialMeasure r;
  r.center = center;
  r.intervals = {{top - 2 * kSMax, top}};
  r.density = [=](double s) { return s <= top ? std::exp(s) / r2 : 0.0; };
  r.cumulative = [=](double s) { return s <= top ? std::exp(s) / r2 : 1.0; };
  Measure mu = radial_measure("uniform_disk", std::move(r));
  mu.density = [=](Point z) { return std::norm(z - center) <= r2 ? 1.0 / (kPi * r2) : 0.0; };
  return mu;
}

Measure radial_measure(std::string name, RadialMeasure r) {
  Measure mu;
  mu.name = std::move(name);
  const RadialMeasure copy = r;
  mu.density = [copy](Point z) {
    const double r2 = std::norm(z - copy.center);
    if (r2 == 0.0) return 0.0;
    const double s = std::log(r2);
    for (const auto& [a, b] : copy.intervals)
      if (s >= a && s <= b) return copy.density(s) / (kPi * r2);
    return 0.0;
  };
  mu.radial = std::move(r);
  return mu;
}

Measure grid_measure(std::string name, GridFunction density) {
  Measure mu;
  mu.name = std::move(name);
  mu.grid = std::move(density);
  return mu;
}

Measure atomic_measure(std::vector<Atom> atoms) {
  Measure mu;
  mu.name = "atomic";
  mu.atoms = std::move(atoms);
  return mu;
}

Measure density_measure(std::string name, std::function<double(Point)> density) {
  Measure mu;
  mu.name = std::move(name);
  mu.density = std::move(density);
  return mu;
}

GridFunction rasterize(const Measure& mu, const std::shared_ptr<const Lattice>& grid) {
  if (mu.grid && mu.grid->grid == grid) return *mu.grid;
  GridFunction out(grid, 0.0);
  std::function<double(Point)> d = mu.density;
  if (!d && mu.grid) {
    const GridFunction g = *mu.grid;
    d = [g](Point z) {
      const double v = g.interpolate(z);
      return std::isnan(v) ? 0.0 : v;
    };
  }
  if (!d) throw std::invalid_argument("rasterize: measure has no density");
  for (std::size_t k = 0; k < grid->size(); ++k)
    if (grid->interior(k)) out[k] = d(grid->node(k));
  return out;
}

Measure dilate(const Measure& mu, double t) {
  Measure out;
  out.name = mu.name + "@dilated";
  const double shift = 2.0 * t;
  Point c{0.0, 0.0};
  if (mu.radial) {
    RadialMeasure r = *mu.radial;
    c = r.center;
    const auto dens = r.density;
    const auto cum = r.cumulative;
    r.density = [dens, shift](double s) { return dens(s - shift); };
    r.cumulative = [cum, shift](double s) { return cum(s - shift); };
    for (auto& iv : r.intervals) iv = {iv.first + shift, iv.second + shift};
    for (auto& b : r.breaks) b += shift;
    out = radial_measure(out.name, std::move(r));
  } else if (mu.density) {
    const auto d = mu.density;
    const double e = std::exp(-t);
    out.density = [d, e, c](Point z) { return e * e * d(c + e * (z - c)); };
  } else if (!mu.has_atoms()) {
    throw std::invalid_argument("dilate: unsupported representation");
  }
  for (const auto& a : mu.atoms) out.atoms.push_back({c + std::exp(t) * (a.location - c), a.mass});
  return out;
}

double integrate(const Measure& mu, const std::function<double(Point)>& f) {
  double acc = 0.0;
  for (const auto& a : mu.atoms) acc += a.mass * f(a.location);
  if (mu.radial) {
    const Point c = mu.radial->center;
    return acc + mu.radial->integrate([&](double s) { return angular_mean(f, c, std::exp(0.5 * s)); });
  }
  if (mu.grid) {
    const GridFunction& g = *mu.grid;
    double sum = 0.0;
    for (std::size_t k = 0; k < g.grid->size(); ++k)
      if (g.grid->interior(k) && g[k] != 0.0) sum += g[k] * f(g.grid->node(k));
    return acc + sum * g.grid->h * g.grid->h;
  }
  if (mu.density) return acc + reference_quadrature().integrate([&](Point z) {
                      const double d = mu.density(z);
                      return d == 0.0 ? 0.0 : d * f(z);
                    });
  return acc;
}

}  // namespace coulomb
