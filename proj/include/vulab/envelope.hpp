#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "vulab/oracle.hpp"
#include "vulab/types.hpp"
#include "vulab/vu.hpp"

namespace vulab {

struct ULagContext;

/// Values on a uniform axis-aligned grid, row-major (last axis fastest).
/// +∞ marks nodes outside the domain.
struct GridFunction {
  Vec lower;
  Vec upper;
  std::vector<int> resolution;
  std::vector<double> values;

  int dim() const { return static_cast<int>(resolution.size()); }
  std::size_t size() const;
  double spacing(int axis) const;
  Vec node(std::size_t flat) const;
  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::vector<int>& idx) const;
};

GridFunction sample_grid(const std::function<double(const Vec&)>& f, const Vec& lower,
                         const Vec& upper, const std::vector<int>& resolution);

/// Pointwise lower convex envelope on the grid: at every node, the minimum of
/// Σλᵢh(xᵢ) over convex combinations of finite nodes with Σλᵢxᵢ = x.
GridFunction convex_envelope(const GridFunction& gf);
/// The same linear program at an arbitrary point of the box.
double envelope_at(const GridFunction& gf, const Vec& point);

struct ConjugateValue {
  double value = -kInf;
  std::size_t argmax = 0;
  bool boundary = false;  // supremum attained on the edge of the box
};

/// h*(z) = max over finite nodes of ⟨z,x⟩ − h(x), exactly.
ConjugateValue conjugate_at(const GridFunction& gf, const Vec& z);
/// Discrete supremum refined by a quadratic fit on the 3ᵈ stencil at the
/// maximizing node; falls back to the discrete value on the boundary.
double conjugate_refined_at(const GridFunction& gf, const Vec& z);
GridFunction legendre(const GridFunction& gf, const Vec& dual_lower, const Vec& dual_upper,
                      const std::vector<int>& dual_resolution);

/// Spread of the finite values on the grid cell containing `point`
/// (+∞ when a corner is outside the domain).
double cell_oscillation(const GridFunction& gf, const Vec& point);

std::string to_csv(const GridFunction& gf);
GridFunction from_csv(const std::string& text);

/// h(w) = f(x̄ + U w_U + V w_V) on B_ε^U × B_{ε_V}^V in frame coordinates.
GridFunction frame_grid(const FunctionModel& model, const VUFrame& frame, double eps_v,
                        int resolution);

struct AgreementReport {
  double max_residual = 0.0;
  double max_grid_error = 0.0;
  bool within_bound = true;  // residual ≤ 2·grid_error at every point
  std::vector<double> residuals;
  std::vector<double> grid_errors;
  Vec spacing;
};

/// |co h − h| at trace points given as frame coordinates (w_U, w_V).
AgreementReport envelope_agreement_check(const FunctionModel& model, const VUFrame& frame,
                                         double eps_v, const std::vector<Vec>& trace_points,
                                         int resolution = 81);

struct ConjugacyReport {
  double max_residual = 0.0;
  std::vector<Vec> z_grid;
  std::vector<double> lhs;  // k_v*(z_U)
  std::vector<double> rhs;  // h*(z_U + z̄_V)
  bool boundary_supremum = false;
};

/// Compares the discrete conjugate of k_v on a U-grid with the discrete
/// conjugate of h on the frame grid, both at `resolution` points per axis.
ConjugacyReport conjugacy_identity_check(const ULagContext& ctx, const std::vector<Vec>& z_u_grid,
                                         int resolution = 401);

}  // namespace vulab
