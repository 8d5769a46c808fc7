#pragma once

#include <vector>

#include "vulab/smooth.hpp"
#include "vulab/types.hpp"

namespace vulab {

struct SolverConfig {
  int max_iters = 500;
  double stop_tol = 1e-15;
  double hessian_floor = 1e-8;
  int working_set = 8;
  // starting lattice is {−1,0,1}ⁿ scaled by start_scale·radius/√n
  double start_scale = 0.5;
  double cluster_rel = 1e-9;
  double sep_rel = 1e-6;  // separation tolerance relative to the ball radius
};

struct Ball {
  Vec center;
  double radius = kInf;

  Vec project(const Vec& x) const;
  bool on_boundary(const Vec& x, double rel = 1e-6) const;
};

struct LocalResult {
  Vec x;
  double value = kInf;
  int iterations = 0;
  bool budget_exceeded = false;
};

/// Sequential quadratic programming for min over the ball of max_i φ_i. Each
/// step solves the minimax QP  min t + ½dᵀHd  s.t. φ_i + ∇φ_iᵀd ≤ t  exactly,
/// with H the multiplier-weighted piece Hessian made positive definite, then
/// runs a projected Armijo search.
LocalResult minimize_max(const std::vector<SmoothPiece>& pieces, const Vec& x0, const Ball& ball,
                         const SolverConfig& cfg);

struct MultistartResult {
  std::vector<Vec> minimizers;  // distinct (≥ sep_tol apart), best first in start order
  double value = kInf;
  bool budget_exceeded = false;
  bool boundary_active = false;
  int starts = 0;
};

/// Deterministic multistart over a ball for a min-max form: every lattice
/// start is polished once per branch, then near-optimal results are clustered.
MultistartResult multistart_minimize(const MinMaxForm& form, const Ball& ball,
                                     const SolverConfig& cfg,
                                     const std::vector<Vec>& extra_starts = {});

/// Start lattice used by multistart_minimize.
std::vector<Vec> start_lattice(const Ball& ball, const SolverConfig& cfg);

}  // namespace vulab
