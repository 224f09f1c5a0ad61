#include "coulomb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coulomb {

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = mid - half * x;
    rule.nodes[hi] = mid + half * x;
    rule.weights[lo] = half * w;
    rule.weights[hi] = half * w;
  }
  return rule;
}

GaussRule composite_gauss(int panels, int order, double a, double b) {
  GaussRule out;
  const GaussRule base = gauss_legendre(order);
  const double width = (b - a) / panels;
  out.nodes.reserve(static_cast<std::size_t>(panels * order));
  out.weights.reserve(static_cast<std::size_t>(panels * order));
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (std::size_t k = 0; k < base.nodes.size(); ++k) {
      out.nodes.push_back(lo + 0.5 * width * (base.nodes[k] + 1.0));
      out.weights.push_back(0.5 * width * base.weights[k]);
    }
  }
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels,
                 int order) {
  const GaussRule rule = composite_gauss(panels, order, a, b);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * f(rule.nodes[k]);
  return acc;
}

double integrate_radial(const std::function<double(double)>& f, double split, int panels,
                        int order) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double inner = integrate([&](double r) { return f(r) * r; }, 0.0, split, panels, order);
  // r = 1/t, dr = -dt/t^2: int_split^inf f(r) r dr = int_0^{1/split} f(1/t) t^-3 dt
  const double outer = integrate(
      [&](double t) {
        if (t <= 0.0) return 0.0;
        const double v = f(1.0 / t);
        return v == 0.0 ? 0.0 : v / (t * t * t);
      },
      0.0, 1.0 / split, panels, order);
  return two_pi * (inner + outer);
}

double log_integral_unimodal(const std::function<double(double)>& g, double s_guess,
                             double step) {
  // locate the maximum by successively finer scans
  double best = s_guess;
  double gbest = g(best);
  for (double span : {64.0, 16.0, 4.0, 1.0, 0.25}) {
    const double lo = best - span, hi = best + span;
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
      const double s = lo + (hi - lo) * i / n;
      const double v = g(s);
      if (v > gbest) {
        gbest = v;
        best = s;
      }
    }
  }
  std::vector<double> terms;
  terms.reserve(4096);
  terms.push_back(gbest);
  for (int dir : {-1, 1}) {
    for (int k = 1;; ++k) {
      const double v = g(best + dir * k * step);
      terms.push_back(v);
      if (v < gbest - 60.0 || k > 2'000'000) break;
    }
  }
  return log_sum_exp(terms) + std::log(step);
}

double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breaks, double max_width, int order) {
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (!(hi > lo)) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width)));
    acc += integrate(f, lo, hi, panels, order);
  }
  return acc;
}

double log_sum_exp(const std::vector<double>& x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

}  // namespace coulomb
