#pragma once

#include <vector>

#include "vulab/types.hpp"

namespace vulab {

/// Solution of min cᵀλ s.t. Aλ = b, λ ≥ 0 with few rows and many columns.
struct LpResult {
  bool feasible = false;
  double value = kInf;
  std::vector<int> basis;  // column indices (−1 marks a redundant row)
  Vec basic_values;
  int pivots = 0;
};

/// Revised simplex. With `warm_basis` from an earlier solve that shares A and
/// c, a dual simplex restarts from that basis; otherwise Phase I runs on
/// artificial columns. Dantzig pricing with a Bland fallback on stalls.
LpResult solve_lp(const Mat& a, const Vec& b, const Vec& c,
                  const std::vector<int>* warm_basis = nullptr);

}  // namespace vulab
