#include "vortexlab/grid.hpp"

#include <cmath>

#include "vortexlab/util.hpp"

namespace vortexlab {

Grid2 Grid2::from_spacing(double half_width, double spacing) {
  if (half_width <= 0.0 || spacing <= 0.0)
    throw ValidationError("Grid2: half_width and spacing must be positive");
  Grid2 g;
  g.nodes = static_cast<int>(std::lround(2.0 * half_width / spacing)) + 1;
  if (g.nodes < 3) throw ValidationError("Grid2: node_count must be >= 3");
  g.half_width = half_width;
  g.spacing = 2.0 * half_width / (g.nodes - 1);
  return g;
}

Grid2 Grid2::from_nodes(double half_width, int nodes) {
  if (half_width <= 0.0) throw ValidationError("Grid2: half_width must be positive");
  if (nodes < 3) throw ValidationError("Grid2: node_count must be >= 3");
  Grid2 g;
  g.half_width = half_width;
  g.nodes = nodes;
  g.spacing = 2.0 * half_width / (nodes - 1);
  return g;
}

void Grid2::validate() const {
  if (half_width <= 0.0 || spacing <= 0.0 || nodes < 3)
    throw ValidationError("Grid2: invalid descriptor");
}

GridN GridN::make(int n, double tan_half_width, int tan_nodes, const Grid2& normal) {
  if (n < 1) throw ValidationError("GridN: tangential dimension must be >= 1");
  if (tan_half_width <= 0.0 || tan_nodes < 3)
    throw ValidationError("GridN: invalid tangential grid");
  normal.validate();
  GridN g;
  g.n = n;
  g.tan_half_width = tan_half_width;
  g.tan_nodes = tan_nodes;
  g.tan_spacing = 2.0 * tan_half_width / (tan_nodes - 1);
  g.normal = normal;
  return g;
}

void GridN::validate() const {
  if (n < 1 || tan_half_width <= 0.0 || tan_spacing <= 0.0 || tan_nodes < 3)
    throw ValidationError("GridN: invalid descriptor");
  normal.validate();
}

Lattice Lattice::from(const Grid2& g) {
  g.validate();
  Lattice lat;
  lat.shape = {g.nodes, g.nodes};
  lat.spacing = {g.spacing, g.spacing};
  lat.origin = {-g.half_width, -g.half_width};
  return lat;
}

Lattice Lattice::from(const GridN& g) {
  g.validate();
  Lattice lat;
  for (int a = 0; a < g.n; ++a) {
    lat.shape.push_back(g.tan_nodes);
    lat.spacing.push_back(g.tan_spacing);
    lat.origin.push_back(-g.tan_half_width);
  }
  for (int a = 0; a < 2; ++a) {
    lat.shape.push_back(g.normal.nodes);
    lat.spacing.push_back(g.normal.spacing);
    lat.origin.push_back(-g.normal.half_width);
  }
  return lat;
}

size_t Lattice::size() const {
  size_t n = 1;
  for (int s : shape) n *= static_cast<size_t>(s);
  return n;
}

const std::vector<size_t>& Lattice::strides() const {
  if (strides_.size() != shape.size()) {
    strides_.assign(shape.size(), 1);
    for (int a = dim() - 2; a >= 0; --a)
      strides_[a] = strides_[a + 1] * static_cast<size_t>(shape[a + 1]);
  }
  return strides_;
}

size_t Lattice::index(const std::vector<int>& idx) const {
  const auto& st = strides();
  size_t flat = 0;
  for (int a = 0; a < dim(); ++a) flat += st[a] * static_cast<size_t>(idx[a]);
  return flat;
}

void Lattice::unravel(size_t flat, std::vector<int>& idx) const {
  const auto& st = strides();
  idx.resize(shape.size());
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(flat / st[a]);
    flat %= st[a];
  }
}

void Lattice::coords(const std::vector<int>& idx, std::vector<double>& x) const {
  x.resize(shape.size());
  for (int a = 0; a < dim(); ++a) x[a] = origin[a] + spacing[a] * idx[a];
}

bool Lattice::same_layout(const Lattice& other) const {
  return shape == other.shape && spacing == other.spacing && origin == other.origin;
}

}  // namespace vortexlab
