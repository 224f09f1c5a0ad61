#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coulomb/geometry.hpp"

namespace coulomb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class InadmissiblePotential : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotInH1 : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class GrowthClass { StrictlySuperLog, SuperLog, Inadmissible };

const char* to_string(GrowthClass g);

struct GrowthConstants {
  double epsilon = 0.0;
  double c_lower = 0.0;  // phi >= (1+eps) psi0 - c_lower on the fit window
  double c_upper = 0.0;  // phi <= (1+eps) psi0 + c_upper on the fit window
};

struct Charge {
  Point location;
  double coefficient = 0.0;
};

/// A function of z that depends only on s = log|z - center|^2, given with its
/// first two s-derivatives. Laplacian = 4 e^{-s} f''(s).
struct RadialProfile {
  Point center{0.0, 0.0};
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  std::vector<double> breaks;  // s-values where f''' may jump
};

class Potential {
 public:
  struct Parts {
    std::string name;
    std::function<double(Point)> eval;
    std::function<double(Point)> laplacian;  // empty: 5-point stencil
    std::optional<RadialProfile> radial;
    std::vector<Charge> charges;
    double domain_radius = kInf;  // eval is +inf beyond this radius
  };

  explicit Potential(Parts parts);

  double operator()(Point z) const { return impl_->eval(z); }
  double eval(Point z) const { return impl_->eval(z); }
  double laplacian(Point z) const;
  bool has_analytic_laplacian() const { return static_cast<bool>(impl_->laplacian); }

  const std::string& name() const { return impl_->name; }
  const std::vector<Charge>& charges() const { return impl_->charges; }
  const std::optional<RadialProfile>& radial() const { return impl_->radial; }
  bool has_poles() const { return !impl_->charges.empty(); }
  double domain_radius() const { return impl_->domain_radius; }
  GrowthClass growth() const { return growth_; }
  const GrowthConstants& growth_constants() const { return constants_; }

  const Parts& parts() const { return *impl_; }

 private:
  std::shared_ptr<const Parts> impl_;
  GrowthClass growth_;
  GrowthConstants constants_;
};

class TestFunction {
 public:
  struct Parts {
    std::string name;
    std::function<double(Point)> eval;
    std::function<Point(Point)> gradient;  // (d/dx, d/dy) packed; empty: finite differences
    std::function<double(Point)> laplacian;  // optional
    double support_radius = kInf;              // support inside |z - support_center| <= r
    Point support_center{0.0, 0.0};
    std::optional<RadialProfile> radial;
    std::optional<double> constant;  // set when u is constant, hence radial about every point
  };

  explicit TestFunction(Parts parts);

  double operator()(Point z) const { return impl_->eval(z); }
  double eval(Point z) const { return impl_->eval(z); }
  Point gradient(Point z) const;
  double laplacian(Point z) const;
  const std::string& name() const { return impl_->name; }
  double support_radius() const { return impl_->support_radius; }
  Point support_center() const { return impl_->support_center; }
  const std::optional<RadialProfile>& radial() const { return impl_->radial; }
  const Parts& parts() const { return *impl_; }

 private:
  std::shared_ptr<const Parts> impl_;
};

struct GrowthFit {
  GrowthClass growth = GrowthClass::Inadmissible;
  GrowthConstants constants;
};

/// Fit phi_min(r) ~ (1+eps) log(1+r^2) on |z| in [1e2, 1e6].
GrowthFit fit_growth(const std::function<double(Point)>& eval);
GrowthClass classify_growth(const Potential& phi);

// ---- potential builders -------------------------------------------------

Potential fs_potential_fn();  // log(1+|z|^2)
/// log(1 + d^2 |z - c|^2): the reference potential moved by an affine map.
Potential fs_affine(double dilation, Point center);
Potential quadratic(double lambda = 1.0);
/// Smooth radial profile; the caller supplies f, f', f'' in s = log|z-c|^2.
Potential radial_potential(std::string name, RadialProfile profile);
Potential from_function(std::string name, std::function<double(Point)> eval,
                        std::function<double(Point)> laplacian = {});
Potential scaled(const Potential& phi, double t);
Potential shifted(const Potential& phi, double c);
Potential plus(const Potential& phi, const TestFunction& u);
/// phi - sum a_i log|z - p_i|^2. Throws InadmissiblePotential when the total
/// charge would destroy the growth class.
Potential quasi_hole(const Potential& base, const std::vector<Charge>& charges);
/// N phi / (N + p), p = 2/beta - 1.
Potential rescale_phi_N(const Potential& phi, int n, double beta);
double p_of_beta(double beta);

/// Bilinear interpolation of samples on a regular rectangular grid; +inf
/// outside the sampled rectangle.
Potential grid_sampled(std::string name, double x0, double y0, double h, int nx, int ny,
                       std::vector<double> values);
/// CSV of x,y,value with a header row, on a regular grid.
Potential load_potential_csv(const std::string& path);
/// JSON array [{"x":..,"y":..,"a":..}].
std::vector<Charge> load_charges_json(const std::string& path);
std::vector<Charge> parse_charges_json(const std::string& text);

/// Bound on the outer radius of the droplet of t*phi:
/// 2 log R <= (1-d)(C2-C1)/(eps - d(1+eps)), d = 1 - t, C2 = sup_{|z|=1} phi,
/// C1 = inf (phi - (1+eps) log+|z|^2), with the fitted eps capped at 1.
double outer_radius_bound(const Potential& phi, double t = 1.0);

// ---- test functions -----------------------------------------------------

TestFunction constant_function(double c);
/// (1-|z|^2)/(1+|z|^2), the l = 1 zonal harmonic up to scale.
TestFunction zonal_function();
/// Radial C^2 bump of given height: equal to height on |z-c| <= inner, decaying
/// with a quintic smoothstep to 0 at |z-c| = outer.
TestFunction radial_bump(Point center = {0.0, 0.0}, double inner = 0.5, double outer = 0.8,
                         double height = 1.0);
TestFunction gaussian_bump(Point center, double width, double amplitude);
TestFunction real_part();
/// |z|^2, for moments (not in H^1).
TestFunction abs_sq();
TestFunction test_function(std::string name, std::function<double(Point)> eval,
                           double support_radius = kInf, Point support_center = {0.0, 0.0});
TestFunction scaled(const TestFunction& u, double c);
TestFunction sum(const TestFunction& u, const TestFunction& v);
TestFunction translated(const TestFunction& u, Point c);

/// (1/4 pi) int |grad u|^2 d lambda. Throws NotInH1 when the integral diverges.
double h1_norm_sq(const TestFunction& u, int resolution = 128);

/// Quintic smoothstep 6x^5 - 15x^4 + 10x^3 clamped to [0, 1], with derivatives.
double smoothstep(double x);
double smoothstep_d1(double x);
double smoothstep_d2(double x);

}  // namespace coulomb
