#pragma once

#include <optional>
#include <vector>

#include "vortexlab/field.hpp"
#include "vortexlab/fields_ops.hpp"

namespace vortexlab {

/// Tilt excess of a configuration against a reference codimension-2 plane.
///
///   E1 = (r^-n / 2pi) \int_{B_r} [ sum_k |grad^A_{e_k} u|^2
///        + eps^2 sum_{(j,k) != (n+1,n+2), j<k} F(e_j, e_k)^2 ]
///
/// where e_1..e_n span the plane and e_{n+1}, e_{n+2} complete the
/// orthonormal basis. The curvature sum runs over unordered pairs except the
/// purely normal one.
struct ExcessReport {
  std::vector<double> center;
  double radius = 0.0;
  double excess = 0.0;         // E1
  double density_ratio = 0.0;  // energy / (r^n 2 pi omega_n)
  EnergyBreakdown energy;
};

/// `plane`: n orthonormal tangential vectors of length n+2 (re-orthonormalized
/// on input, tolerance 1e-12 against degenerate frames).
ExcessReport excess(const FieldConfiguration& config, const std::vector<double>& center,
                    double r, const std::vector<std::vector<double>>& plane);

struct DensityReport {
  double normalized = 0.0;    // energy / (r^n 2 pi omega_n); ~1 at unit density
  double unnormalized = 0.0;  // energy / |B_r^n|; ~2 pi at unit density
  EnergyBreakdown energy;
};
DensityReport density_ratio(const FieldConfiguration& config, double r);

/// Common zeros of Re u and Im u, one bilinear cell solve per sign-change
/// cell of each normal-plane slice. Points carry full (y..., z1, z2)
/// coordinates. Empty result allowed.
std::vector<std::vector<double>> extract_nodal_set(const FieldConfiguration& config);

struct FitSettings {
  double holder_alpha = 0.5;
  double multivalue_tolerance = 0.0;  // 0 = auto (5 tangential spacings)
};

/// Nodal points fitted as a graph (f1, f2) over the tangential grid, with
/// discrete Lipschitz / second-difference / Holder norms and the mean
/// curvature of the fitted graph.
struct NodalGraph {
  Lattice tan;
  std::vector<double> f;          // f[beta*N + i]
  double fit_residual = 0.0;      // max |point - fitted graph| over input points
  double lipschitz = 0.0;         // max neighbour slope
  double second_diff_sup = 0.0;   // C^2 proxy
  double holder_seminorm = 0.0;   // of second differences, exponent alpha
  double holder_alpha = 0.5;
  std::vector<double> mean_curvature;  // [beta*N + i]
};
NodalGraph fit_graph(const std::vector<std::vector<double>>& points, const Lattice& tangential,
                     const FitSettings& settings = {});

/// Marching-squares extraction of {|u| = t} per normal slice, plus the
/// best-fit circle per slice (the tube core estimate).
struct LevelTube {
  std::vector<std::vector<double>> points;
  struct Slice {
    std::vector<int> y_index;
    std::array<double, 2> center = {0.0, 0.0};
    double radius = 0.0;
    int point_count = 0;
    bool boundary_clipped = false;
  };
  std::vector<Slice> slices;
};
LevelTube modulus_level_tube(const FieldConfiguration& config, double t);

/// Mean curvature vector components of a sampled graph over a tangential
/// lattice (exact graph formula, centered differences). Returns the two
/// normal components per node, layout [beta*N + i]. Shared by FermiChart and
/// NodalGraph.
std::vector<double> graph_mean_curvature(const Lattice& tangential,
                                         const std::vector<double>& f);

}  // namespace vortexlab
