#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vulab/local_solver.hpp"
#include "vulab/oracle.hpp"
#include "vulab/types.hpp"

namespace vulab {

struct TiltProbeResult {
  Vec z;
  std::vector<Vec> minimizers;
  double value = kInf;
  bool single_valued = false;
  bool budget_exceeded = false;
  bool boundary_active = false;
};

/// argmin of f − ⟨z,·⟩ over the closed ball B_ε(x̄) by deterministic multistart.
TiltProbeResult tilt_map(const FunctionModel& model, const Vec& x_bar, double eps, const Vec& z,
                         const SolverConfig& cfg = {});

enum class TiltStatus { Stable, Unstable, Inconclusive };
std::string to_string(TiltStatus s);

struct StabilityVerdict {
  TiltStatus status = TiltStatus::Inconclusive;
  bool stable = false;
  double lipschitz = 0.0;
  std::optional<Vec> witness;
  double grid_radius = 0.0;
  std::vector<TiltProbeResult> probes;  // grid order, z = 0 first
};

/// Probes m_f on 11ᵏ-style grids of tilts in B_{tilt_radius}(0). tilt_radius ≤ 0
/// selects ε/10. Requires 0 ∈ co ∂f(x̄).
StabilityVerdict tilt_stability_test(const FunctionModel& model, const Vec& x_bar, double eps,
                                     double tilt_radius = -1.0, int grid_size = 11,
                                     const SolverConfig& cfg = {});

/// Smallest r in r_grid satisfying the prox-regularity inequality on sampled
/// triples; nullopt when none does.
std::optional<double> prox_regularity_test(const FunctionModel& model, const Vec& x_bar,
                                           const Vec& z_bar, double eps,
                                           const std::vector<double>& r_grid);

struct Minorant {
  double alpha = 0.0;
  double r = 0.0;
};

/// Smallest R in R_grid with f ≥ f(x̄) − (R/2)‖x − x̄‖² on a lattice of the box.
std::optional<Minorant> quadratic_minorant_test(const FunctionModel& model, const Vec& x_bar,
                                                const std::vector<double>& r_grid,
                                                const Vec& box_lower, const Vec& box_upper,
                                                int resolution = 41);

/// Largest β in β_grid with f(x′)−⟨z,x′⟩ ≥ f(x)−⟨z,x⟩+β‖x′−x‖² on sampled x′ ∈ B_γ(x).
std::optional<double> strict_order2_test(const FunctionModel& model, const Vec& x, const Vec& z,
                                         double gamma, const std::vector<double>& beta_grid,
                                         int resolution = 21);

/// 0.01, 0.02, …, 10.
std::vector<double> default_beta_grid();
/// 0, 0.01, …, 10.
std::vector<double> default_r_grid();

}  // namespace vulab
