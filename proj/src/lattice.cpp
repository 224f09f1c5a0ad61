#include "coulomb/lattice.hpp"

#include <cmath>
#include <algorithm>
#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace coulomb {

Lattice make_lattice(double h, double radius) {
  if (!(h > 0.0) || !(radius > 0.0) || radius / h > 1e4)
    throw std::invalid_argument("make_lattice: bad spacing or radius");
  Lattice g;
  g.h = h;
  g.radius = radius;
  g.half = static_cast<int>(std::ceil(radius / h)) + 1;
  g.n = 2 * g.half + 1;
  g.kind.assign(g.size(), NodeKind::outside);
  g.row_begin.assign(static_cast<std::size_t>(g.n), 0);
  g.row_end.assign(static_cast<std::size_t>(g.n), 0);
  for (int j = 0; j < g.n; ++j) {
    int lo = g.n, hi = -1;
    for (int i = 0; i < g.n; ++i) {
      if (std::abs(g.node(i, j)) < radius) {
        g.kind[g.index(i, j)] = NodeKind::interior;
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    g.row_begin[static_cast<std::size_t>(j)] = hi >= lo ? lo : 0;
    g.row_end[static_cast<std::size_t>(j)] = hi >= lo ? hi + 1 : 0;
  }
  for (int j = 1; j + 1 < g.n; ++j)
    for (int i = 1; i + 1 < g.n; ++i) {
      const std::size_t k = g.index(i, j);
      if (g.kind[k] != NodeKind::outside) continue;
      if (g.kind[k - 1] == NodeKind::interior || g.kind[k + 1] == NodeKind::interior ||
          g.kind[k - static_cast<std::size_t>(g.n)] == NodeKind::interior ||
          g.kind[k + static_cast<std::size_t>(g.n)] == NodeKind::interior)
        g.kind[k] = NodeKind::boundary;
    }
  return g;
}

long Lattice::locate(Point z) const {
  const long i = std::lround(z.real() / h) + half;
  const long j = std::lround(z.imag() / h) + half;
  if (i < 0 || j < 0 || i >= n || j >= n) return -1;
  return j * n + i;
}

double GridFunction::interpolate(Point z) const {
  const Lattice& g = *grid;
  const double fx = z.real() / g.h + g.half, fy = z.imag() / g.h + g.half;
  if (!(fx >= 0.0 && fy >= 0.0 && fx <= g.n - 1 && fy <= g.n - 1)) return std::nan("");
  const int i = std::min(static_cast<int>(fx), g.n - 2), j = std::min(static_cast<int>(fy), g.n - 2);
  const double ax = fx - i, ay = fy - j;
  return (1 - ax) * (1 - ay) * at(i, j) + ax * (1 - ay) * at(i + 1, j) + (1 - ax) * ay * at(i, j + 1) +
         ax * ay * at(i + 1, j + 1);
}

GridFunction discrete_laplacian(const GridFunction& f) {
  const Lattice& g = *f.grid;
  GridFunction out(f.grid, 0.0);
  const double ih2 = 1.0 / (g.h * g.h);
  const std::size_t n = static_cast<std::size_t>(g.n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.interior(k)) continue;
    out[k] = (f[k - 1] + f[k + 1] + f[k - n] + f[k + n] - 4.0 * f[k]) * ih2;
  }
  return out;
}

double grid_integral(const GridFunction& f) {
  const Lattice& g = *f.grid;
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.interior(k)) acc += f[k];
  return acc * g.h * g.h;
}

double square_self_log(double h) {
  // mean of log|p - q| over the unit square: -25/12 + pi/3 + log(2)/3
  constexpr double kUnitMeanLog = -25.0 / 12.0 + kPi / 3.0 + 0.69314718055994531 / 3.0;
  return 2.0 * (std::log(h) + kUnitMeanLog);
}

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct LogConvolver::Impl {
  std::shared_ptr<const Lattice> grid;
  int p = 0;  // padded side
  int pc = 0;  // complex columns
  fftw_complex* kernel = nullptr;
  fftw_plan forward = nullptr, backward = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (kernel) fftw_free(kernel);
  }
};

LogConvolver::LogConvolver(std::shared_ptr<const Lattice> grid) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.grid = std::move(grid);
  const Lattice& g = *m.grid;
  m.p = 2 * g.n;
  m.pc = m.p / 2 + 1;
  const std::size_t real_size = static_cast<std::size_t>(m.p) * m.p;
  const std::size_t cplx_size = static_cast<std::size_t>(m.p) * m.pc;
  double* in = fftw_alloc_real(real_size);
  m.kernel = fftw_alloc_complex(cplx_size);
  fftw_complex* scratch = fftw_alloc_complex(cplx_size);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    m.forward = fftw_plan_dft_r2c_2d(m.p, m.p, in, m.kernel, FFTW_ESTIMATE);
    m.backward = fftw_plan_dft_c2r_2d(m.p, m.p, scratch, in, FFTW_ESTIMATE);
  }
  const double self = square_self_log(g.h);
  for (int j = 0; j < m.p; ++j) {
    const int dj = j < g.n ? j : j - m.p;
    for (int i = 0; i < m.p; ++i) {
      const int di = i < g.n ? i : i - m.p;
      double v = 0.0;
      if (std::abs(di) < g.n && std::abs(dj) < g.n)
        v = (di == 0 && dj == 0) ? self : std::log(g.h * g.h * (double(di) * di + double(dj) * dj));
      in[static_cast<std::size_t>(j) * m.p + i] = v;
    }
  }
  fftw_execute_dft_r2c(m.forward, in, m.kernel);
  fftw_free(in);
  fftw_free(scratch);
}

LogConvolver::~LogConvolver() = default;

std::vector<double> LogConvolver::potential(const std::vector<double>& masses) const {
  const Impl& m = *impl_;
  const Lattice& g = *m.grid;
  if (masses.size() != g.size()) throw std::invalid_argument("LogConvolver: size mismatch");
  const std::size_t real_size = static_cast<std::size_t>(m.p) * m.p;
  const std::size_t cplx_size = static_cast<std::size_t>(m.p) * m.pc;
  double* in = fftw_alloc_real(real_size);
  fftw_complex* spec = fftw_alloc_complex(cplx_size);
  std::fill(in, in + real_size, 0.0);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      in[static_cast<std::size_t>(j) * m.p + i] = masses[g.index(i, j)];
  fftw_execute_dft_r2c(m.forward, in, spec);
  for (std::size_t k = 0; k < cplx_size; ++k) {
    const double a = spec[k][0], b = spec[k][1];
    const double c = m.kernel[k][0], d = m.kernel[k][1];
    spec[k][0] = a * c - b * d;
    spec[k][1] = a * d + b * c;
  }
  fftw_execute_dft_c2r(m.backward, spec, in);
  std::vector<double> out(g.size());
  const double scale = 1.0 / static_cast<double>(real_size);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) out[g.index(i, j)] = in[static_cast<std::size_t>(j) * m.p + i] * scale;
  fftw_free(in);
  fftw_free(spec);
  return out;
}

}  // namespace coulomb
