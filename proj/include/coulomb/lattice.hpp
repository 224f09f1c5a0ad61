#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "coulomb/geometry.hpp"

namespace coulomb {

enum class NodeKind : std::uint8_t { outside = 0, interior = 1, boundary = 2 };

/// Square lattice of spacing h centred at the origin, covering the disk of
/// radius R plus one ring of boundary nodes.
struct Lattice {
  double h = 0.0;
  double radius = 0.0;
  int n = 0;  // nodes per side
  int half = 0;
  std::vector<NodeKind> kind;
  std::vector<int> row_begin, row_end;  // interior i-range per row, [begin, end)

  std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
  Point node(int i, int j) const { return {(i - half) * h, (j - half) * h}; }
  Point node(std::size_t k) const { return node(static_cast<int>(k % n), static_cast<int>(k / n)); }
  bool interior(std::size_t k) const { return kind[k] == NodeKind::interior; }
  /// Nearest node to z, or -1 when z is off the lattice.
  long locate(Point z) const;
};

Lattice make_lattice(double h, double radius);

struct GridFunction {
  std::shared_ptr<const Lattice> grid;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(std::shared_ptr<const Lattice> g, double fill = 0.0)
      : grid(std::move(g)), values(grid->size(), fill) {}

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  double at(int i, int j) const { return values[grid->index(i, j)]; }
  /// Bilinear interpolation; NaN off the lattice.
  double interpolate(Point z) const;
};

/// 5-point Laplacian at interior nodes, zero elsewhere.
GridFunction discrete_laplacian(const GridFunction& f);

/// Sum over interior nodes of f * h^2.
double grid_integral(const GridFunction& f);

/// Mean log|z-w|^2 for z, w independent and uniform in a square of side h.
double square_self_log(double h);

/// Discrete logarithmic potential U_i = sum_j m_j log|z_i - z_j|^2 on a
/// lattice, via zero-padded FFT convolution; the diagonal uses square_self_log.
class LogConvolver {
 public:
  explicit LogConvolver(std::shared_ptr<const Lattice> grid);
  ~LogConvolver();
  LogConvolver(const LogConvolver&) = delete;
  LogConvolver& operator=(const LogConvolver&) = delete;

  std::vector<double> potential(const std::vector<double>& masses) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace coulomb
