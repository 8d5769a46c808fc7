#pragma once

#include <string>
#include <vector>

#include "vulab/jet2.hpp"
#include "vulab/types.hpp"
#include "vulab/ulag.hpp"

namespace vulab {

struct NodeDiagnostics {
  bool boundary_active = false;  // v(u) on the V-ball boundary
  bool rim = false;              // too close to the U-ball rim for a gradient estimate
  bool budget_exceeded = false;
  double hull_distance = 0.0;
  double consistency = 0.0;  // |f − (L + ⟨z̄_V, v⟩)|
};

struct ManifoldTrace {
  ULagContext ctx;
  double delta = 0.0;
  int resolution = 0;
  double spacing = 0.0;
  int shrinks = 0;
  std::vector<Vec> u_nodes;
  std::vector<std::vector<int>> lattice_index;
  std::vector<Vec> v_values;
  std::vector<double> f_values;
  std::vector<Vec> z_u_values;  // NaN on rim nodes
  std::vector<Mat> dv_values;   // dim_v × dim_u
  std::vector<NodeDiagnostics> diagnostics;

  std::size_t size() const { return u_nodes.size(); }
  bool usable(std::size_t i) const { return !diagnostics[i].rim && !diagnostics[i].boundary_active; }
};

struct TraceConfig {
  double dv_step = 1e-4;
  int max_shrinks = 3;
};

/// Graph of v over the lattice of U′ ∩ B_δ. δ ≤ 0 selects ε/4; δ > ε is rejected.
/// Halves δ (up to max_shrinks times) while some node has v(u) on the V-ball boundary.
ManifoldTrace trace(const ULagContext& ctx, double delta, int resolution, const TraceConfig& cfg = {});

struct C11Report {
  double lipschitz = 0.0;
  int pairs = 0;
};

C11Report c11_check(const ManifoldTrace& trace);

struct C11Refinement {
  double coarse = 0.0;
  double fine = 0.0;
  double ratio = 1.0;
  bool finite = false;
  bool stable = false;  // |fine/coarse − 1| ≤ 0.25
};

/// c11_check on the trace and on a fresh trace at 2(res−1)+1 nodes per axis.
C11Refinement c11_refinement(const ManifoldTrace& trace, const TraceConfig& cfg = {});

struct ChainReport {
  double max_residual = 0.0;
  int generators = 0;
  std::vector<double> node_residuals;
};

/// |U′ᵀs + ∇vᵀV′ᵀs − ∇g(u)| over generators s of co ∂f at every usable node,
/// with ∇g = z_U + ∇vᵀz̄_V.
ChainReport grad_chain_check(const ManifoldTrace& trace, double tau = 1e-7);

struct TaylorConfig {
  std::vector<double> radii = geometric_grid(0.05, 0.5, 5);
  int directions = 16;
  double eta_c = 0.5;
  std::vector<double> v_offsets = {0.0, 0.01, 0.1};  // relative to ε_V
};

struct TaylorReport {
  double worst_margin = kInf;
  int samples = 0;
  std::optional<Vec> witness_u;
};

/// min of f(x̄+u′+v′) − [f(node) + ⟨z, Δx⟩ + ½ΔuᵀQΔu − η(‖Δu‖)‖Δu‖²].
TaylorReport taylor_lower_check(const ManifoldTrace& trace, const Mat& q, const TaylorConfig& cfg = {});

struct CertifiedQ {
  Mat q;
  Membership verdict = Membership::Inconclusive;
};

/// Q = ∇²L(u) by central differences minus `shrink`·I, checked by subjet membership of L.
CertifiedQ certified_q(const ULagContext& ctx, const Vec& u, double shrink = 0.1);

struct ContinuityReport {
  std::vector<int> resolutions;
  std::vector<double> max_jump;
  double ratio = 0.0;  // finest over previous
  bool decreasing = true;
};

double dv_max_jump(const ManifoldTrace& trace);
/// Jump modulus of ∇v at the trace resolution and `levels` − 1 successive 2× refinements.
ContinuityReport dv_continuity_check(const ManifoldTrace& trace, int levels = 2,
                                     const TraceConfig& cfg = {});

/// Rows: u…, v…, f, z_U…, dv (row-major)…, boundary_active, rim.
std::string trace_to_csv(const ManifoldTrace& trace);

}  // namespace vulab
