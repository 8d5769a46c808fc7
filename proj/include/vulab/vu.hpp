#pragma once

#include <vector>

#include "vulab/json_io.hpp"
#include "vulab/oracle.hpp"
#include "vulab/types.hpp"

namespace vulab {

struct VUFrame {
  Vec x_bar;
  Vec z_bar;
  Mat u_basis;  // n×k, orthonormal columns
  Mat v_basis;  // n×(n−k)
  double eps = 1.0;

  int dim() const { return static_cast<int>(x_bar.size()); }
  int dim_u() const { return static_cast<int>(u_basis.cols()); }
  int dim_v() const { return static_cast<int>(v_basis.cols()); }
};

/// Centroid of the generators (deduplicated upstream).
Vec relative_interior_point(const SubdifferentialPolytope& poly);

/// Hull membership of p in co(generators) up to `tol` distance.
bool in_hull(const std::vector<Vec>& generators, const Vec& p, double tol = 1e-8);

/// V = span{g − z̄}, U = V^⊥; singular values below rank_tol·σ_max are zero.
VUFrame decompose(const SubdifferentialPolytope& poly, const Vec& z_bar, double rank_tol = 1e-8,
                  double eps = 1.0);

struct Coordinates {
  Vec u;
  Vec v;
};

Coordinates project(const VUFrame& frame, const Vec& x);
Vec assemble(const VUFrame& frame, const Vec& u, const Vec& v);

struct DecompositionReport {
  double u_width = 0.0;          // max over sampled u ∈ U of |δ*(u)+δ*(−u)|
  double u_component_spread = 0.0;  // max over generators of ‖P_U g − z̄_U‖
  std::vector<Vec> witnesses;    // sampled u ∉ U with δ*(u)+δ*(−u) > 0
  int u_samples = 0;
  int off_u_samples = 0;
};

/// Support function δ*(u) of co(generators).
double support(const std::vector<Vec>& generators, const Vec& u);

DecompositionReport check_decomposition(const FunctionModel& model, const VUFrame& frame,
                                        double tau = 1e-9);

Json frame_to_json(const VUFrame& frame);
VUFrame frame_from_json(const Json& j);

}  // namespace vulab
