#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace vortexlab {

/// Uniform square grid on [-half_width, half_width]^2.
///
/// Rounding contract: when constructed from (half_width, spacing), the node
/// count per axis is round(2*half_width/spacing) + 1 and the spacing is then
/// recomputed exactly; the stored spacing is authoritative.
struct Grid2 {
  double half_width = 0.0;
  double spacing = 0.0;
  int nodes = 0;  // per axis

  Grid2() = default;
  static Grid2 from_spacing(double half_width, double spacing);
  static Grid2 from_nodes(double half_width, int nodes);

  double coord(int i) const { return -half_width + spacing * i; }
  size_t node_count() const { return static_cast<size_t>(nodes) * nodes; }
  void validate() const;
};

/// Tangential box [-tan_half_width, tan_half_width]^n times a Grid2 z-plane.
struct GridN {
  int n = 1;  // tangential dimension; total dimension is n + 2
  double tan_half_width = 0.0;
  double tan_spacing = 0.0;
  int tan_nodes = 0;  // per tangential axis
  Grid2 normal;

  static GridN make(int n, double tan_half_width, int tan_nodes, const Grid2& normal);
  double tan_coord(int i) const { return -tan_half_width + tan_spacing * i; }
  void validate() const;
};

/// Flat index space shared by all field operations: axes 0..n-1 are
/// tangential (absent for plain 2D), the last two axes are the z-plane.
/// The last axis is fastest.
struct Lattice {
  std::vector<int> shape;
  std::vector<double> spacing;
  std::vector<double> origin;

  static Lattice from(const Grid2& g);
  static Lattice from(const GridN& g);

  int dim() const { return static_cast<int>(shape.size()); }
  size_t size() const;
  const std::vector<size_t>& strides() const;

  size_t index(const std::vector<int>& idx) const;
  void unravel(size_t flat, std::vector<int>& idx) const;
  void coords(const std::vector<int>& idx, std::vector<double>& x) const;
  double coord(int axis, int i) const { return origin[axis] + spacing[axis] * i; }

  bool same_layout(const Lattice& other) const;

 private:
  mutable std::vector<size_t> strides_;
};

}  // namespace vortexlab
