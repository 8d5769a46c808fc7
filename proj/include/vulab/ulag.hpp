#pragma once

#include <vector>

#include "vulab/local_solver.hpp"
#include "vulab/oracle.hpp"
#include "vulab/types.hpp"
#include "vulab/vu.hpp"

namespace vulab {

/// Everything the localized U-Lagrangian needs. u coordinates refer to
/// u_basis (U′ ⊆ U), v coordinates to v_basis (V′ = U′^⊥).
struct ULagContext {
  FunctionModel model;
  VUFrame frame;
  Mat u_basis;
  Mat v_basis;
  double eps = 1.0;
  double eps_v = 1.0;
  Vec anchor;  // z̄ in ambient coordinates
  SolverConfig solver;

  int dim_u() const { return static_cast<int>(u_basis.cols()); }
  int dim_v() const { return static_cast<int>(v_basis.cols()); }
  Vec anchor_v() const { return v_basis.transpose() * anchor; }
  Vec point(const Vec& u, const Vec& v) const;
};

/// Context on U′ = U. eps_v ≤ 0 selects frame.eps.
ULagContext make_context(const FunctionModel& model, const VUFrame& frame, double eps_v = -1.0);
/// Context on a subspace U′ ⊆ U given by orthonormal columns.
ULagContext make_context(const FunctionModel& model, const VUFrame& frame, const Mat& u_prime,
                         double eps_v = -1.0);

/// Anchor used by the Lagrangian campaigns: 0 when 0 ∈ co ∂f(x̄), else the centroid.
Vec lagrangian_anchor(const SubdifferentialPolytope& poly);

struct VSelection {
  Vec v;
  double value = kInf;  // f(x̄+u+v) − ⟨z̄_V, v⟩
  bool boundary_active = false;
  bool budget_exceeded = false;
  int candidates = 0;
};

VSelection v_of_u(const ULagContext& ctx, const Vec& u);
double L_eps(const ULagContext& ctx, const Vec& u);
double k_v(const ULagContext& ctx, const Vec& u);

struct GradientEstimate {
  Vec z_u;
  double hull_distance = 0.0;
};

/// Central differences of L_eps, cross-checked against co ∂f at the selected point.
/// fd_step ≤ 0 selects 1e−5·(1+‖u‖).
GradientEstimate grad_L(const ULagContext& ctx, const Vec& u, double fd_step = -1.0);

struct ConvexityReport {
  double worst = -kInf;  // max of L((a+b)/2) − (L(a)+L(b))/2
  double scale = 1.0;
  int pairs = 0;
};

ConvexityReport convexity_check(const ULagContext& ctx, const std::vector<Vec>& u_grid);

/// Max over sampled directions of ‖v(u)‖/‖u‖ for each radius.
std::vector<double> little_oh_check(const ULagContext& ctx, const std::vector<double>& radii);

/// Uniform lattice of U′ points with `resolution` nodes per axis on
/// [−radius, radius]ᵏ, kept only inside the closed ball.
std::vector<Vec> u_lattice(int k, double radius, int resolution);

}  // namespace vulab
