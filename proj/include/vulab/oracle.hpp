#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vulab/smooth.hpp"
#include "vulab/types.hpp"

namespace vulab {

enum class ModelKind { MaxOfSmooth, SumOfSmoothAndPolyhedral, Custom };

std::string to_string(ModelKind k);

struct AffinePiece {
  Vec a;
  double b = 0.0;
};

struct QuadraticMinorant {
  double alpha = 0.0;
  double r = 0.0;  // q(x) = α − (R/2)‖x − x̄‖²
};

struct ModelFlags {
  bool locally_lipschitz = true;
  bool convex = false;
  std::optional<QuadraticMinorant> quadratic_minorant;
};

/// A nonsmooth function given by structured oracles. Structured models carry
/// a min-max form (see MinMaxForm) from which values, active pieces and
/// subdifferential generators are derived. A custom model may instead carry
/// only a value oracle, in which case structural queries throw.
struct FunctionModel {
  std::string name;
  int dim = 0;
  ModelKind kind = ModelKind::Custom;
  std::vector<SmoothPiece> pieces;     // max-of-smooth pieces or smooth summands
  std::vector<AffinePiece> polyhedral;  // combined by max, added to the smooth sum
  ModelFlags flags;
  MinMaxForm branches;                 // empty for value-only custom models
  std::function<double(const Vec&)> value_fn;
  Vec base_point;
  double default_radius = 1.0;
  std::vector<std::string> notes;

  bool structured() const { return !branches.empty(); }
  double eval(const Vec& x) const;
  const MinMaxForm& form() const;
  int piece_count() const;
};

struct ActiveSet {
  std::vector<int> indices;  // flattened over branches, branch-major
  double tolerance = 1e-9;
};

/// Finite generator representation of co ∂f(x).
struct SubdifferentialPolytope {
  std::vector<Vec> generators;
  Vec point;
  bool exact = true;
};

double eval(const FunctionModel& model, const Vec& x);
ActiveSet active_set(const FunctionModel& model, const Vec& x, double tau = 1e-9);
SubdifferentialPolytope subdifferential_polytope(const FunctionModel& model, const Vec& x,
                                                 double tau = 1e-9);
/// ∂^∞f(x) as a generator list; only {0} for locally Lipschitz models.
std::vector<Vec> singular_subdifferential(const FunctionModel& model, const Vec& x);

/// Appends g unless it is within tol of an existing entry.
void add_unique(std::vector<Vec>& list, const Vec& g, double tol = 1e-12);

FunctionModel make_max_of_smooth(std::string name, int dim, std::vector<SmoothPiece> pieces,
                                 ModelFlags flags);
FunctionModel make_sum(std::string name, int dim, std::vector<SmoothPiece> smooth,
                       std::vector<AffinePiece> polyhedral, ModelFlags flags);
FunctionModel make_min_max(std::string name, int dim, MinMaxForm form, ModelFlags flags);
FunctionModel make_custom(std::string name, int dim, std::function<double(const Vec&)> value,
                          ModelFlags flags);
/// ½xᵀAx, convex iff A is positive semidefinite.
FunctionModel make_quadratic(const Mat& a);

/// Builtin test functions by name: abs_diff, four_quadrant_max, crossing_max,
/// abs_plus_quad, huber_source_abs, quadratic(A). A is one of I, In, c*In,
/// diag(a,b,...) or a JSON matrix such as [[1,0],[0,2]].
FunctionModel builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// Loads {dim, kind, pieces:[{type, ...}], polyhedral:[{a,b}], flags, base_point}.
FunctionModel load_problem_json(const std::string& text);
/// A builtin name or a path to a JSON problem file.
FunctionModel load_problem(const std::string& source);

}  // namespace vulab
