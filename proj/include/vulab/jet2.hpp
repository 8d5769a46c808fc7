#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vulab/local_solver.hpp"
#include "vulab/oracle.hpp"
#include "vulab/types.hpp"

namespace vulab {

/// t_k = start·ratioᵏ for k = 0..count−1.
std::vector<double> geometric_grid(double start, double ratio, int count);

struct Jet2Config {
  std::vector<double> t_grid = geometric_grid(0.1, 0.5, 11);
  double dir_ball = 0.1;  // direction perturbations of size dir_ball·t·‖h‖
  double divergence_threshold = 1e3;
  int finest_shells = 3;
  double neighbour_scale = 10.0;  // neighbour points at distance neighbour_scale·t
  double z_radius = 0.5;          // neighbour subgradients kept within this of z̄
  double tau = 1e-9;
};

struct JetCandidate {
  Vec x;
  Vec z;
  Mat q;
};

struct ShellValue {
  bool divergent = false;
  double value = kInf;
  std::vector<double> t;
  std::vector<double> trace;  // per-shell value, coarse to fine
};

struct RankOneProfile {
  std::vector<Vec> directions;
  std::vector<ShellValue> values;
  double divergence_threshold = 1e3;
  std::vector<double> t_grid;
};

/// 2[f(x+tu) − f(x) − t⟨z,u⟩]/t²; +∞ if f(x+tu) = +∞.
double delta2(const FunctionModel& model, const Vec& x, const Vec& z, double t, const Vec& u);

/// Shell minima of Δ₂ over a shrinking ball of directions around h.
ShellValue dini_second(const FunctionModel& model, const Vec& x, const Vec& z, const Vec& h,
                       const Jet2Config& cfg = {});

/// Rank-one support of the limiting subhessian at (x, z) along h: per shell,
/// the supremum over nearby pairs (x_k, z_k) of the shell minimum over ±h.
ShellValue rank1_support(const FunctionModel& model, const Vec& x, const Vec& z, const Vec& h,
                         const Jet2Config& cfg = {});

struct MembershipConfig {
  std::vector<double> radii = geometric_grid(0.1, 0.5, 11);
  int directions = 64;
  double eta_c = 0.5;
  int finest_shells = 3;
};

enum class Membership { Member, Rejected, Inconclusive };
std::string to_string(Membership m);

struct MembershipResult {
  Membership verdict = Membership::Inconclusive;
  std::optional<Vec> witness;
  std::vector<double> shell_margins;  // worst normalized margin per shell
  std::vector<double> shell_slack;    // η per shell
};

/// Second-order lower support test f(x+d) − f(x) − ⟨z,d⟩ − ½dᵀQd ≥ −η‖d‖² on shells.
MembershipResult subjet_membership(const FunctionModel& model, const JetCandidate& candidate,
                                   const MembershipConfig& cfg = {});

struct SecondOrderComponent {
  Mat u2_basis;
  RankOneProfile profile;
  double angle_to_u = 0.0;  // largest angle of a U² vector to U
  bool inside_u = true;
};

/// U² = span of directions with finite rank-one support.
SecondOrderComponent second_order_component(const FunctionModel& model, const Vec& x_bar,
                                            const Vec& z_bar, int dir_count = 64,
                                            const Jet2Config& cfg = {}, const Mat* u_basis = nullptr);

enum class HessianSource { Analytic, FiniteDifference, Moreau };
std::string to_string(HessianSource s);

struct HessianSample {
  Vec point;
  Mat hessian;
};

struct HessianBundle {
  std::vector<HessianSample> samples;
  HessianSource source = HessianSource::Analytic;
};

struct HessianSampleConfig {
  std::vector<double> radii = geometric_grid(0.1, 0.5, 7);
  int directions = 16;
  double gradient_tol = 0.5;
  double fd_rel = 1e-4;
};

/// Hessians at differentiable points x_k near x̄ with ∇f(x_k) near z̄.
HessianBundle limiting_hessians(const FunctionModel& model, const Vec& x_bar, const Vec& z_bar,
                                const HessianSampleConfig& cfg = {});

std::vector<Vec> coderivative_c11(const HessianBundle& bundle, const Vec& h);
/// max over samples of hᵀQh.
double coderivative_support(const HessianBundle& bundle, const Vec& h);
/// min over samples and unit directions of hᵀQh (and over sample eigenvalues).
double tilt_criterion_c11(const HessianBundle& bundle, int dir_count = 64);

struct MoreauValue {
  double value = kInf;
  Vec prox;
  Vec gradient;
  int prox_count = 1;  // distinct proximal points found; f_λ may be nonsmooth when > 1
};

MoreauValue moreau_envelope(const FunctionModel& model, double lambda, const Vec& x,
                            const SolverConfig& cfg = {});
/// f_λ as a one-piece model (value and gradient through the proximal point).
FunctionModel moreau_model(const FunctionModel& model, double lambda, const SolverConfig& cfg = {});

struct ParaConvexityReport {
  double violation = 0.0;
  int pairs = 0;
};

/// Midpoint violations of w ↦ ‖w‖²q(w/‖w‖) + r‖w‖² over finite profile directions.
ParaConvexityReport para_convexity_check(const RankOneProfile& profile, double r);

struct DualityReport {
  double residual = kInf;
  Mat q;
  Mat conjugate_hessian;
  Vec z_bar;
};

/// ‖∇²f*(z̄) − Q⁻¹‖_F with Q = ∇²f(x̄) by finite differences and f* from a
/// refined discrete conjugate on a box of half-width `box_radius` around x̄.
DualityReport hessian_duality_check(const FunctionModel& model, const Vec& x_bar,
                                    double fd_step = 2e-2, int resolution = 401,
                                    double box_radius = 1.0);

/// M̂: largest plain Δ₂ at the finest shell over neighbour pairs along U²
/// directions and eigenvectors of the polarized quotient matrix.
double uniform_bound_check(const FunctionModel& model, const Vec& x_bar, const Vec& z_bar,
                           const Mat& u2_basis, const Jet2Config& cfg = {});

/// CSV rows: direction coordinates, classification, finest-shell value.
std::string profile_to_csv(const RankOneProfile& profile);

}  // namespace vulab
