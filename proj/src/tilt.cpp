#include "vulab/tilt.hpp"

#include <algorithm>
#include <cmath>

#include "vulab/errors.hpp"
#include "vulab/parallel.hpp"
#include "vulab/ulag.hpp"
#include "vulab/vu.hpp"

namespace vulab {

std::string to_string(TiltStatus s) {
  switch (s) {
    case TiltStatus::Stable:
      return "stable";
    case TiltStatus::Unstable:
      return "unstable";
    case TiltStatus::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

TiltProbeResult tilt_map(const FunctionModel& model, const Vec& x_bar, double eps, const Vec& z,
                         const SolverConfig& cfg) {
  if (!(eps > 0.0)) throw PreconditionFailed("tilt ball radius must be positive");
  const MinMaxForm tilted = add_terms(model.form(), -z, 0.0, Vec::Zero(model.dim));
  const Ball ball{x_bar, eps};
  const MultistartResult r = multistart_minimize(tilted, ball, cfg, {x_bar});
  TiltProbeResult out;
  out.z = z;
  out.minimizers = r.minimizers;
  out.value = r.value;
  out.single_valued = r.minimizers.size() == 1;
  out.budget_exceeded = r.budget_exceeded;
  out.boundary_active = r.boundary_active;
  return out;
}

namespace {

// Lattice points with `res` nodes per axis on [−r, r]ⁿ inside the closed ball,
// with the origin moved to the front.
std::vector<Vec> tilt_grid(int n, double r, int res) {
  std::vector<Vec> pts = u_lattice(n, r, res);
  auto zero = std::find_if(pts.begin(), pts.end(), [](const Vec& p) { return p.norm() == 0.0; });
  if (zero != pts.end()) {
    std::rotate(pts.begin(), zero, zero + 1);
  } else {
    pts.insert(pts.begin(), Vec::Zero(n));
  }
  return pts;
}

std::vector<Vec> ball_samples(const Vec& center, double radius, int res) {
  std::vector<Vec> out;
  for (const Vec& p : u_lattice(static_cast<int>(center.size()), radius, res)) out.push_back(center + p);
  return out;
}

}  // namespace

StabilityVerdict tilt_stability_test(const FunctionModel& model, const Vec& x_bar, double eps,
                                     double tilt_radius, int grid_size, const SolverConfig& cfg) {
  const SubdifferentialPolytope poly = subdifferential_polytope(model, x_bar);
  if (!in_hull(poly.generators, Vec::Zero(model.dim), 1e-8))
    throw PreconditionFailed("0 is not in co of the subdifferential at the base point");
  StabilityVerdict out;
  out.grid_radius = tilt_radius > 0.0 ? tilt_radius : eps / 10.0;
  const std::vector<Vec> tilts = tilt_grid(model.dim, out.grid_radius, grid_size);
  out.probes.resize(tilts.size());
  parallel_for(tilts.size(), [&](std::size_t i) { out.probes[i] = tilt_map(model, x_bar, eps, tilts[i], cfg); });

  bool budget = false;
  for (const auto& p : out.probes) {
    budget = budget || p.budget_exceeded;
    if (!out.witness && !p.single_valued) out.witness = p.z;
  }
  const auto& p0 = out.probes.front();
  if (!out.witness && (p0.minimizers.front() - x_bar).norm() > 1e-8) out.witness = p0.z;

  for (std::size_t i = 0; i < out.probes.size(); ++i) {
    if (!out.probes[i].single_valued) continue;
    for (std::size_t j = i + 1; j < out.probes.size(); ++j) {
      if (!out.probes[j].single_valued) continue;
      const double dz = (out.probes[i].z - out.probes[j].z).norm();
      const double dm = (out.probes[i].minimizers.front() - out.probes[j].minimizers.front()).norm();
      if (dz > 0.0) out.lipschitz = std::max(out.lipschitz, dm / dz);
    }
  }
  if (budget) {
    out.status = TiltStatus::Inconclusive;
  } else {
    out.status = out.witness ? TiltStatus::Unstable : TiltStatus::Stable;
  }
  out.stable = out.status == TiltStatus::Stable;
  return out;
}

std::optional<double> prox_regularity_test(const FunctionModel& model, const Vec& x_bar,
                                           const Vec& z_bar, double eps,
                                           const std::vector<double>& r_grid) {
  if (model.structured()) {
    const auto poly = subdifferential_polytope(model, x_bar);
    if (!in_hull(poly.generators, z_bar, 1e-8)) throw PreconditionFailed("z̄ is not in co ∂f(x̄)");
  }
  const double fbar = model.eval(x_bar);
  const std::vector<Vec> pts = ball_samples(x_bar, eps, 9);
  double required = 0.0;
  for (const Vec& x : pts) {
    const double fx = model.eval(x);
    if (std::abs(fx - fbar) > eps) continue;
    std::vector<Vec> zs;
    if (model.structured()) {
      const auto poly = subdifferential_polytope(model, x);
      zs = poly.generators;
      add_unique(zs, relative_interior_point(poly));
    } else {
      zs.push_back(z_bar);
    }
    for (const Vec& z : zs) {
      if ((z - z_bar).norm() > eps) continue;
      for (const Vec& xp : pts) {
        const double d2 = (xp - x).squaredNorm();
        if (d2 == 0.0) continue;
        const double gap = fx + z.dot(xp - x) - model.eval(xp);
        required = std::max(required, 2.0 * gap / d2);
      }
    }
  }
  for (double r : r_grid)
    if (r >= required - 1e-9 * (1.0 + std::abs(r))) return r;
  return std::nullopt;
}

std::optional<Minorant> quadratic_minorant_test(const FunctionModel& model, const Vec& x_bar,
                                                const std::vector<double>& r_grid,
                                                const Vec& box_lower, const Vec& box_upper,
                                                int resolution) {
  const int n = model.dim;
  const double fbar = model.eval(x_bar);
  double required = 0.0;
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(resolution);
  for (std::size_t f = 0; f < total; ++f) {
    Vec x(n);
    std::size_t rem = f;
    for (int a = n - 1; a >= 0; --a) {
      const auto i = static_cast<double>(rem % static_cast<std::size_t>(resolution));
      rem /= static_cast<std::size_t>(resolution);
      x(a) = box_lower(a) + (box_upper(a) - box_lower(a)) * i / (resolution - 1);
    }
    const double d2 = (x - x_bar).squaredNorm();
    if (d2 == 0.0) continue;
    required = std::max(required, 2.0 * (fbar - model.eval(x)) / d2);
  }
  for (double r : r_grid)
    if (r >= required - 1e-9 * (1.0 + std::abs(r))) return Minorant{fbar, r};
  return std::nullopt;
}

std::optional<double> strict_order2_test(const FunctionModel& model, const Vec& x, const Vec& z,
                                         double gamma, const std::vector<double>& beta_grid,
                                         int resolution) {
  if (model.structured()) {
    const auto poly = subdifferential_polytope(model, x);
    if (!in_hull(poly.generators, z, 1e-8)) throw PreconditionFailed("z is not in co ∂f(x)");
  }
  const double base = model.eval(x) - z.dot(x);
  double allowed = kInf;
  for (const Vec& xp : ball_samples(x, gamma, resolution)) {
    const double d2 = (xp - x).squaredNorm();
    if (d2 == 0.0) continue;
    allowed = std::min(allowed, (model.eval(xp) - z.dot(xp) - base) / d2);
  }
  std::optional<double> best;
  for (double b : beta_grid)
    if (b <= allowed + 1e-9 * (1.0 + std::abs(b)) && (!best || b > *best)) best = b;
  return best;
}

std::vector<double> default_beta_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 1000; ++k) g.push_back(k / 100.0);
  return g;
}

std::vector<double> default_r_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 1000; ++k) g.push_back(k / 100.0);
  return g;
}

}  // namespace vulab
