#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace coulomb {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
GaussRule composite_gauss(int panels, int order, double a, double b);

/// Integral over [a, b] with composite Gauss-Legendre.
double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels = 32, int order = 16);

/// Composite Gauss-Legendre on [a, b] split at the given points, with panels
/// no wider than max_width.
double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breaks, double max_width = 0.25, int order = 10);

/// Integral of a radial density over the plane, f given as a function of r:
/// 2*pi * int_0^inf f(r) r dr. The part r > split uses t = 1/r.
double integrate_radial(const std::function<double(double)>& f, double split = 1.0,
                        int panels = 48, int order = 16);

/// log of int_{-inf}^{inf} exp(g(s)) ds for a unimodal log-integrand g, by a
/// trapezoid rule in s centred on the maximum (spectrally accurate for smooth g).
double log_integral_unimodal(const std::function<double(double)>& g, double s_guess,
                             double step = 0.02);

/// Numerically stable log(sum(exp(x))).
double log_sum_exp(const std::vector<double>& x);

}  // namespace coulomb
