#include "coulomb/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "coulomb/quadrature.hpp"

namespace coulomb {

const char* to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::StrictlySuperLog: return "StrictlySuperLog";
    case GrowthClass::SuperLog: return "SuperLog";
    case GrowthClass::Inadmissible: return "Inadmissible";
  }
  return "?";
}

namespace {

double five_point(const std::function<double(Point)>& f, Point z) {
  const double h = 1e-3 * std::max(1.0, std::abs(z));
  const double c = f(z);
  return (f(z + h) + f(z - h) + f(z + Point(0, h)) + f(z - Point(0, h)) - 4.0 * c) / (h * h);
}

Point central_gradient(const std::function<double(Point)>& f, Point z) {
  const double h = 1e-5 * std::max(1.0, std::abs(z));
  return {(f(z + h) - f(z - h)) / (2 * h), (f(z + Point(0, h)) - f(z - Point(0, h))) / (2 * h)};
}

double log_rel(Point z, Point c) { return std::log(std::norm(z - c)); }

// log(1 + e^s) without overflow
double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }
double logistic(double s) { return s > 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }
double logistic_d(double s) {
  const double c = std::cosh(0.5 * s);
  return 0.25 / (c * c);
}

bool same_center(const std::optional<RadialProfile>& a, const std::optional<RadialProfile>& b) {
  return a && b && a->center == b->center;
}

RadialProfile combine(const RadialProfile& a, double ca, const RadialProfile& b, double cb) {
  std::vector<double> breaks = a.breaks;
  if (cb != 0.0) breaks.insert(breaks.end(), b.breaks.begin(), b.breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return {a.center, [=](double s) { return ca * a.f(s) + cb * b.f(s); },
          [=](double s) { return ca * a.df(s) + cb * b.df(s); },
          [=](double s) { return ca * a.d2f(s) + cb * b.d2f(s); }, breaks};
}

}  // namespace

// ---- Potential ----------------------------------------------------------

Potential::Potential(Parts parts) : impl_(std::make_shared<const Parts>(std::move(parts))) {
  if (!impl_->eval) throw std::invalid_argument("Potential: eval is required");
  const GrowthFit fit = fit_growth(impl_->eval);
  growth_ = fit.growth;
  constants_ = fit.constants;
}

double Potential::laplacian(Point z) const {
  if (impl_->laplacian) return impl_->laplacian(z);
  return five_point(impl_->eval, z);
}

GrowthFit fit_growth(const std::function<double(Point)>& eval) {
  constexpr int kRadii = 41, kAngles = 16;
  std::vector<double> xs, ys;
  for (int k = 0; k < kRadii; ++k) {
    const double r = std::pow(10.0, 2.0 + 4.0 * k / (kRadii - 1));
    double lo = kInf;
    for (int a = 0; a < kAngles; ++a) lo = std::min(lo, eval(std::polar(r, 2 * kPi * (a + 0.5) / kAngles)));
    if (std::isnan(lo)) return {};
    if (std::isfinite(lo)) {
      xs.push_back(std::log1p(r * r));
      ys.push_back(lo);
    }
  }
  GrowthFit out;
  if (xs.size() < 2) {
    // +inf on the whole window: confined to a bounded set
    out.growth = GrowthClass::StrictlySuperLog;
    out.constants = {kInf, 0.0, kInf};
    return out;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  double eps = sxy / sxx - 1.0;
  if (eps > 1e-3) {
    out.growth = GrowthClass::StrictlySuperLog;
  } else if (eps > -1e-3) {
    out.growth = GrowthClass::SuperLog;
    eps = 0.0;
  } else {
    out.growth = GrowthClass::Inadmissible;
  }
  double c_lo = -kInf, c_hi = -kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    c_lo = std::max(c_lo, (1.0 + eps) * xs[i] - ys[i]);
    c_hi = std::max(c_hi, ys[i] - (1.0 + eps) * xs[i]);
  }
  out.constants = {eps, c_lo, c_hi};
  return out;
}

GrowthClass classify_growth(const Potential& phi) { return phi.growth(); }

Potential radial_potential(std::string name, RadialProfile profile) {
  Potential::Parts parts;
  parts.name = std::move(name);
  const RadialProfile p = profile;
  parts.eval = [p](Point z) { return p.f(log_rel(z, p.center)); };
  parts.laplacian = [p](Point z) {
    const double s = log_rel(z, p.center);
    return 4.0 * std::exp(-s) * p.d2f(s);
  };
  parts.radial = std::move(profile);
  return Potential(std::move(parts));
}

Potential fs_potential_fn() {
  Potential::Parts parts;
  parts.name = "fs";
  parts.eval = [](Point z) { return fs_potential(z); };
  parts.laplacian = [](Point z) {
    const double q = 1.0 + std::norm(z);
    return 4.0 / (q * q);
  };
  parts.radial = RadialProfile{{0.0, 0.0}, softplus, logistic, logistic_d};
  return Potential(std::move(parts));
}

Potential fs_affine(double dilation, Point center) {
  if (!(dilation > 0.0)) throw std::invalid_argument("fs_affine: dilation must be positive");
  const double shift = 2.0 * std::log(dilation);
  const double d2 = dilation * dilation;
  Potential::Parts parts;
  parts.name = "fs_affine";
  parts.eval = [=](Point z) { return std::log1p(d2 * std::norm(z - center)); };
  parts.laplacian = [=](Point z) {
    const double q = 1.0 + d2 * std::norm(z - center);
    return 4.0 * d2 / (q * q);
  };
  parts.radial = RadialProfile{center, [=](double s) { return softplus(s + shift); },
                               [=](double s) { return logistic(s + shift); },
                               [=](double s) { return logistic_d(s + shift); }};
  return Potential(std::move(parts));
}

Potential quadratic(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("quadratic: lambda must be positive");
  Potential::Parts parts;
  parts.name = "quad";
  parts.eval = [lambda](Point z) { return lambda * std::norm(z); };
  parts.laplacian = [lambda](Point) { return 4.0 * lambda; };
  auto e = [lambda](double s) { return lambda * std::exp(s); };
  parts.radial = RadialProfile{{0.0, 0.0}, e, e, e};
  return Potential(std::move(parts));
}

Potential from_function(std::string name, std::function<double(Point)> eval,
                        std::function<double(Point)> laplacian) {
  Potential::Parts parts;
  parts.name = std::move(name);
  parts.eval = std::move(eval);
  parts.laplacian = std::move(laplacian);
  return Potential(std::move(parts));
}

Potential scaled(const Potential& phi, double t) {
  Potential::Parts parts = phi.parts();
  const Potential base = phi;
  parts.name = phi.name() + "*" + std::to_string(t);
  parts.eval = [base, t](Point z) { return t * base(z); };
  if (phi.has_analytic_laplacian())
    parts.laplacian = [base, t](Point z) { return t * base.laplacian(z); };
  if (phi.radial()) parts.radial = combine(*phi.radial(), t, *phi.radial(), 0.0);
  for (auto& c : parts.charges) c.coefficient *= t;
  return Potential(std::move(parts));
}

Potential shifted(const Potential& phi, double c) {
  Potential::Parts parts = phi.parts();
  const Potential base = phi;
  parts.eval = [base, c](Point z) { return base(z) + c; };
  if (phi.radial()) {
    const RadialProfile r = *phi.radial();
    parts.radial = RadialProfile{r.center, [r, c](double s) { return r.f(s) + c; }, r.df, r.d2f, r.breaks};
  }
  return Potential(std::move(parts));
}

Potential plus(const Potential& phi, const TestFunction& u) {
  Potential::Parts parts = phi.parts();
  const Potential base = phi;
  parts.name = phi.name() + "+" + u.name();
  parts.eval = [base, u](Point z) { return base(z) + u(z); };
  if (phi.has_analytic_laplacian() && u.parts().laplacian)
    parts.laplacian = [base, u](Point z) { return base.laplacian(z) + u.laplacian(z); };
  else
    parts.laplacian = {};
  if (u.parts().constant && phi.radial()) {
    const RadialProfile r = *phi.radial();
    const double c = *u.parts().constant;
    parts.radial = RadialProfile{r.center, [r, c](double s) { return r.f(s) + c; }, r.df, r.d2f, r.breaks};
  } else if (same_center(phi.radial(), u.radial())) {
    parts.radial = combine(*phi.radial(), 1.0, *u.radial(), 1.0);
  } else {
    parts.radial.reset();
  }
  return Potential(std::move(parts));
}

Potential quasi_hole(const Potential& base, const std::vector<Charge>& charges) {
  if (charges.empty()) return base;
  for (const auto& c : charges)
    if (!(c.coefficient > 0.0)) throw std::invalid_argument("quasi_hole: coefficients must be positive");
  Potential::Parts parts = base.parts();
  parts.name = base.name() + "+charges";
  const Potential b = base;
  const std::vector<Charge> cs = charges;
  parts.eval = [b, cs](Point z) {
    double v = b(z);
    for (const auto& c : cs) v -= c.coefficient * std::log(std::norm(z - c.location));
    return v;
  };
  if (base.has_analytic_laplacian())
    parts.laplacian = [b](Point z) { return b.laplacian(z); };
  parts.charges.insert(parts.charges.end(), charges.begin(), charges.end());
  const bool centred = base.radial() && std::all_of(charges.begin(), charges.end(), [&](const Charge& c) {
                         return c.location == base.radial()->center;
                       });
  if (centred) {
    double a = 0.0;
    for (const auto& c : charges) a += c.coefficient;
    const RadialProfile r = *base.radial();
    parts.radial = RadialProfile{r.center, [r, a](double s) { return r.f(s) - a * s; },
                                 [r, a](double s) { return r.df(s) - a; }, r.d2f, r.breaks};
  } else {
    parts.radial.reset();
  }
  Potential out(std::move(parts));
  if (base.growth() != GrowthClass::Inadmissible && out.growth() == GrowthClass::Inadmissible)
    throw InadmissiblePotential("quasi_hole: total charge exceeds the growth margin");
  return out;
}

double p_of_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  return 2.0 / beta - 1.0;
}

Potential rescale_phi_N(const Potential& phi, int n, double beta) {
  if (n < 1) throw std::invalid_argument("rescale_phi_N: n must be >= 1");
  const double p = p_of_beta(beta);
  return scaled(phi, n / (n + p));
}

Potential grid_sampled(std::string name, double x0, double y0, double h, int nx, int ny,
                       std::vector<double> values) {
  if (nx < 2 || ny < 2 || !(h > 0.0) || values.size() != static_cast<std::size_t>(nx) * ny)
    throw std::invalid_argument("grid_sampled: inconsistent grid");
  auto data = std::make_shared<const std::vector<double>>(std::move(values));
  auto eval = [=](Point z) {
    const double fx = (z.real() - x0) / h, fy = (z.imag() - y0) / h;
    if (!(fx >= 0.0 && fy >= 0.0 && fx <= nx - 1 && fy <= ny - 1)) return kInf;
    const int i = std::min(static_cast<int>(fx), nx - 2), j = std::min(static_cast<int>(fy), ny - 2);
    const double ax = fx - i, ay = fy - j;
    auto at = [&](int a, int b) { return (*data)[static_cast<std::size_t>(b) * nx + a]; };
    return (1 - ax) * (1 - ay) * at(i, j) + ax * (1 - ay) * at(i + 1, j) + (1 - ax) * ay * at(i, j + 1) +
           ax * ay * at(i + 1, j + 1);
  };
  Potential::Parts parts;
  parts.name = std::move(name);
  parts.eval = eval;
  parts.laplacian = [eval, h](Point z) {
    return (eval(z + h) + eval(z - h) + eval(z + Point(0, h)) + eval(z - Point(0, h)) - 4 * eval(z)) /
           (h * h);
  };
  const double xs[] = {x0, x0 + h * (nx - 1)}, ys[] = {y0, y0 + h * (ny - 1)};
  double rmax = 0.0;
  for (double x : xs)
    for (double y : ys) rmax = std::max(rmax, std::hypot(x, y));
  parts.domain_radius = rmax;
  return Potential(std::move(parts));
}

Potential load_potential_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open potential file " + path);
  std::string line;
  std::getline(in, line);
  std::map<std::pair<double, double>, double> samples;
  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::string a, b, c;
    if (!(row >> a >> b >> c)) throw std::runtime_error("malformed potential row: " + line);
    const double x = std::stod(a), y = std::stod(b), v = std::stod(c);
    samples[{x, y}] = v;
    xs.push_back(x);
    ys.push_back(y);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(xs);
  uniq(ys);
  if (xs.size() < 2 || ys.size() < 2) throw std::runtime_error("potential grid too small");
  const double h = xs[1] - xs[0];
  auto regular = [h](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i] - v[i - 1] - h) > 1e-9 * std::max(1.0, h)) return false;
    return true;
  };
  if (!regular(xs) || !regular(ys) || samples.size() != xs.size() * ys.size())
    throw std::runtime_error("potential CSV is not a complete regular grid");
  std::vector<double> values;
  values.reserve(samples.size());
  for (double y : ys)
    for (double x : xs) values.push_back(samples.at({x, y}));
  return grid_sampled(path, xs.front(), ys.front(), h, static_cast<int>(xs.size()),
                      static_cast<int>(ys.size()), std::move(values));
}

std::vector<Charge> parse_charges_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array()) throw std::runtime_error("charges JSON must be an array");
  std::vector<Charge> out;
  for (const auto& e : j) out.push_back({{e.at("x").get<double>(), e.at("y").get<double>()}, e.at("a").get<double>()});
  return out;
}

std::vector<Charge> load_charges_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open charges file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_charges_json(ss.str());
}

double outer_radius_bound(const Potential& phi, double t) {
  if (phi.growth() != GrowthClass::StrictlySuperLog)
    throw InadmissiblePotential("outer_radius_bound: needs strictly super-logarithmic growth");
  const double eps = std::min(1.0, phi.growth_constants().epsilon);
  const double delta = 1.0 - t;
  const double denom = eps - delta * (1.0 + eps);
  if (!(t > 0.0 && t <= 1.0) || !(denom > 0.0))
    throw std::invalid_argument("outer_radius_bound: delta too large for the bound");
  double c1 = phi(Point(0.0, 0.0));
  double c2 = -kInf;
  constexpr int kAngles = 64;
  for (int a = 0; a < kAngles; ++a) {
    const double th = 2 * kPi * (a + 0.5) / kAngles;
    c2 = std::max(c2, phi(std::polar(1.0, th)));
    for (int k = 0; k <= 180; ++k) {
      const double r = std::pow(10.0, -3.0 + 9.0 * k / 180.0);
      const double logp = std::max(0.0, 2.0 * std::log(r));
      c1 = std::min(c1, phi(std::polar(r, th)) - (1.0 + eps) * logp);
    }
  }
  if (!std::isfinite(c2)) throw std::invalid_argument("outer_radius_bound: phi is unbounded on |z| = 1");
  const double two_log_r = (1.0 - delta) * (c2 - c1) / denom;
  return std::min(std::max(1.0, std::exp(0.5 * two_log_r)), std::max(1.0, phi.domain_radius()));
}

// ---- TestFunction ---------------------------------------------------------

TestFunction::TestFunction(Parts parts) : impl_(std::make_shared<const Parts>(std::move(parts))) {
  if (!impl_->eval) throw std::invalid_argument("TestFunction: eval is required");
}

Point TestFunction::gradient(Point z) const {
  if (impl_->gradient) return impl_->gradient(z);
  return central_gradient(impl_->eval, z);
}

double TestFunction::laplacian(Point z) const {
  if (impl_->laplacian) return impl_->laplacian(z);
  return five_point(impl_->eval, z);
}

namespace {

TestFunction from_radial(std::string name, RadialProfile p, double support = kInf) {
  TestFunction::Parts parts;
  parts.name = std::move(name);
  parts.eval = [p](Point z) { return p.f(log_rel(z, p.center)); };
  parts.gradient = [p](Point z) {
    const Point d = z - p.center;
    const double r2 = std::norm(d);
    if (r2 == 0.0) return Point(0.0, 0.0);
    // du/dr = 2 f'(s) / r, grad = du/dr * d / r
    return 2.0 * p.df(std::log(r2)) / r2 * d;
  };
  parts.laplacian = [p](Point z) {
    const double s = log_rel(z, p.center);
    return 4.0 * std::exp(-s) * p.d2f(s);
  };
  parts.support_radius = support;
  parts.support_center = p.center;
  parts.radial = std::move(p);
  return TestFunction(std::move(parts));
}

}  // namespace

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

double smoothstep_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

TestFunction constant_function(double c) {
  auto zero = [](double) { return 0.0; };
  TestFunction::Parts parts = from_radial("constant", {{0.0, 0.0}, [c](double) { return c; }, zero, zero}).parts();
  parts.constant = c;
  return TestFunction(std::move(parts));
}

TestFunction zonal_function() {
  RadialProfile p{{0.0, 0.0}, [](double s) { return -std::tanh(0.5 * s); },
                  [](double s) {
                    const double c = std::cosh(0.5 * s);
                    return -0.5 / (c * c);
                  },
                  [](double s) {
                    const double c = std::cosh(0.5 * s);
                    return 0.5 * std::tanh(0.5 * s) / (c * c);
                  }};
  return from_radial("zonal", std::move(p));
}

TestFunction radial_bump(Point center, double inner, double outer, double height) {
  if (!(inner >= 0.0 && outer > inner)) throw std::invalid_argument("radial_bump: need 0 <= inner < outer");
  const double w = outer - inner;
  // u(r) = height (1 - S((r - inner)/w)); f(s) = u(e^{s/2})
  auto ur = [=](double r) { return -height * smoothstep_d1((r - inner) / w) / w; };
  auto urr = [=](double r) { return -height * smoothstep_d2((r - inner) / w) / (w * w); };
  RadialProfile p{center,
                  [=](double s) { return height * (1.0 - smoothstep((std::exp(0.5 * s) - inner) / w)); },
                  [=](double s) {
                    const double r = std::exp(0.5 * s);
                    return 0.5 * r * ur(r);
                  },
                  [=](double s) {
                    const double r = std::exp(0.5 * s);
                    return 0.25 * (r * r * urr(r) + r * ur(r));
                  },
                  {}};
  if (inner > 0.0) p.breaks.push_back(2.0 * std::log(inner));
  p.breaks.push_back(2.0 * std::log(outer));
  return from_radial("bump", std::move(p), outer);
}

TestFunction gaussian_bump(Point center, double width, double amplitude) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  const double iw2 = 1.0 / (width * width);
  RadialProfile p{center, [=](double s) { return amplitude * std::exp(-std::exp(s) * iw2); },
                  [=](double s) {
                    const double x = std::exp(s) * iw2;
                    return -amplitude * x * std::exp(-x);
                  },
                  [=](double s) {
                    const double x = std::exp(s) * iw2;
                    return amplitude * (x * x - x) * std::exp(-x);
                  }};
  return from_radial("gaussian", std::move(p));
}

TestFunction real_part() {
  TestFunction::Parts parts;
  parts.name = "re_z";
  parts.eval = [](Point z) { return z.real(); };
  parts.gradient = [](Point) { return Point(1.0, 0.0); };
  parts.laplacian = [](Point) { return 0.0; };
  return TestFunction(std::move(parts));
}

TestFunction abs_sq() {
  auto e = [](double s) { return std::exp(s); };
  return from_radial("abs_sq", {{0.0, 0.0}, e, e, e});
}

TestFunction test_function(std::string name, std::function<double(Point)> eval, double support_radius,
                           Point support_center) {
  TestFunction::Parts parts;
  parts.name = std::move(name);
  parts.eval = std::move(eval);
  parts.support_radius = support_radius;
  parts.support_center = support_center;
  return TestFunction(std::move(parts));
}

TestFunction scaled(const TestFunction& u, double c) {
  TestFunction::Parts parts = u.parts();
  const TestFunction b = u;
  parts.name = u.name() + "*" + std::to_string(c);
  parts.eval = [b, c](Point z) { return c * b(z); };
  parts.gradient = [b, c](Point z) { return c * b.gradient(z); };
  if (u.parts().laplacian) parts.laplacian = [b, c](Point z) { return c * b.laplacian(z); };
  if (u.radial()) parts.radial = combine(*u.radial(), c, *u.radial(), 0.0);
  if (parts.constant) *parts.constant *= c;
  return TestFunction(std::move(parts));
}

TestFunction sum(const TestFunction& u, const TestFunction& v) {
  TestFunction::Parts parts;
  parts.name = u.name() + "+" + v.name();
  parts.eval = [u, v](Point z) { return u(z) + v(z); };
  parts.gradient = [u, v](Point z) { return u.gradient(z) + v.gradient(z); };
  if (u.parts().laplacian && v.parts().laplacian)
    parts.laplacian = [u, v](Point z) { return u.laplacian(z) + v.laplacian(z); };
  if (std::isfinite(u.support_radius()) && std::isfinite(v.support_radius())) {
    // smallest disk about the origin-independent centre of u containing both
    const double r = std::max(u.support_radius(),
                              std::abs(v.support_center() - u.support_center()) + v.support_radius());
    parts.support_center = u.support_center();
    parts.support_radius = r;
  }
  if (same_center(u.radial(), v.radial())) parts.radial = combine(*u.radial(), 1.0, *v.radial(), 1.0);
  if (u.parts().constant && v.parts().constant) parts.constant = *u.parts().constant + *v.parts().constant;
  return TestFunction(std::move(parts));
}

TestFunction translated(const TestFunction& u, Point c) {
  TestFunction::Parts parts = u.parts();
  const TestFunction b = u;
  parts.name = u.name() + "@shift";
  parts.eval = [b, c](Point z) { return b(z - c); };
  parts.gradient = [b, c](Point z) { return b.gradient(z - c); };
  if (u.parts().laplacian) parts.laplacian = [b, c](Point z) { return b.laplacian(z - c); };
  parts.support_center = u.support_center() + c;
  if (u.radial()) {
    RadialProfile r = *u.radial();
    r.center += c;
    parts.radial = std::move(r);
  }
  return TestFunction(std::move(parts));
}

double h1_norm_sq(const TestFunction& u, int resolution) {
  if (u.radial()) {
    // conformal invariance: (1/4pi) int |grad u|^2 = int f'(s)^2 ds
    const auto& p = *u.radial();
    return integrate_split([&](double s) { return p.df(s) * p.df(s); }, -80.0, 80.0, p.breaks, 8.0 / resolution, 8);
  }
  auto g2 = [&](Point z) { return std::norm(u.gradient(z)); };
  const Point c = u.support_center();
  const int n_ang = 4 * resolution;
  auto polar_sum = [&](const GaussRule& radial, bool inverted) {
    double acc = 0.0;
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
      const double rho = radial.nodes[i];
      if (rho <= 0.0) continue;
      double ring = 0.0;
      for (int a = 0; a < n_ang; ++a) {
        const Point w = std::polar(rho, 2 * kPi * (a + 0.5) / n_ang);
        ring += inverted ? g2(c + 1.0 / w) / (rho * rho * rho * rho) : g2(c + w);
      }
      acc += radial.weights[i] * rho * ring * (2 * kPi / n_ang);
    }
    return acc;
  };
  const int panels = std::max(4, resolution / 8);
  double total = 0.0;
  if (std::isfinite(u.support_radius())) {
    total = polar_sum(composite_gauss(panels, 16, 0.0, u.support_radius()), false);
  } else {
    auto ring_max = [&](double r) {
      double m = 0.0;
      for (int a = 0; a < 32; ++a) m = std::max(m, g2(c + std::polar(r, 2 * kPi * (a + 0.5) / 32)));
      return m * r * r * r * r;
    };
    if (ring_max(1e4) > 100.0 * ring_max(1e2) + 1e-12)
      throw NotInH1("h1_norm_sq: gradient decays too slowly at infinity");
    const double split = 4.0;
    total = polar_sum(composite_gauss(panels, 16, 0.0, split), false) +
            polar_sum(composite_gauss(panels, 16, 0.0, 1.0 / split), true);
  }
  return total / (4.0 * kPi);
}

}  // namespace coulomb
