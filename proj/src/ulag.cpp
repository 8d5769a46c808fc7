#include "vulab/ulag.hpp"

#include <algorithm>
#include <cmath>

#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"

namespace vulab {

Vec ULagContext::point(const Vec& u, const Vec& v) const {
  Vec x = frame.x_bar;
  if (u.size()) x += u_basis * u;
  if (v.size()) x += v_basis * v;
  return x;
}

ULagContext make_context(const FunctionModel& model, const VUFrame& frame, double eps_v) {
  return make_context(model, frame, frame.u_basis, eps_v);
}

ULagContext make_context(const FunctionModel& model, const VUFrame& frame, const Mat& u_prime,
                         double eps_v) {
  if (u_prime.cols() > 0) {
    const Mat resid = u_prime - frame.u_basis * (frame.u_basis.transpose() * u_prime);
    if (frame.dim_u() == 0 || resid.norm() > 1e-10)
      throw PreconditionFailed("U' must lie in U");
  }
  ULagContext ctx;
  ctx.model = model;
  ctx.frame = frame;
  ctx.u_basis = u_prime;
  ctx.v_basis = orthonormal_complement(u_prime, frame.dim());
  // keep V' = V when U' = U so coordinates match the frame
  if (u_prime.cols() == frame.dim_u()) ctx.v_basis = frame.v_basis;
  ctx.eps = frame.eps;
  ctx.eps_v = eps_v > 0.0 ? eps_v : frame.eps;
  ctx.anchor = frame.z_bar;
  return ctx;
}

Vec lagrangian_anchor(const SubdifferentialPolytope& poly) {
  const Vec zero = Vec::Zero(poly.point.size());
  if (in_hull(poly.generators, zero, 1e-8)) return zero;
  Vec c = Vec::Zero(poly.point.size());
  for (const Vec& g : poly.generators) c += g;
  return c / static_cast<double>(poly.generators.size());
}

VSelection v_of_u(const ULagContext& ctx, const Vec& u) {
  VSelection out;
  const int m = ctx.dim_v();
  const Vec offset = ctx.point(u, Vec::Zero(m));
  if (m == 0) {
    out.v = Vec(0);
    out.value = ctx.model.eval(offset);
    out.candidates = 1;
    return out;
  }
  const MinMaxForm inner =
      add_terms(restrict_affine(ctx.model.form(), offset, ctx.v_basis), -ctx.anchor_v(), 0.0,
                Vec::Zero(m));
  Ball ball{Vec::Zero(m), ctx.eps_v};
  const MultistartResult r = multistart_minimize(inner, ball, ctx.solver);
  std::vector<Vec> mins = r.minimizers;
  std::stable_sort(mins.begin(), mins.end(), [](const Vec& a, const Vec& b) {
    const double na = a.norm(), nb = b.norm();
    if (std::abs(na - nb) > 1e-12 * (1.0 + na)) return na < nb;
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  out.v = mins.front();
  out.value = r.value;
  out.boundary_active = ball.on_boundary(out.v);
  out.budget_exceeded = r.budget_exceeded;
  out.candidates = static_cast<int>(mins.size());
  return out;
}

double L_eps(const ULagContext& ctx, const Vec& u) {
  if (u.norm() > ctx.eps) return kInf;
  const VSelection s = v_of_u(ctx, u);
  const Vec v = s.v;
  return ctx.model.eval(ctx.point(u, v)) - ctx.anchor_v().dot(v);
}

double k_v(const ULagContext& ctx, const Vec& u) {
  if (u.norm() > ctx.eps) return kInf;
  const VSelection s = v_of_u(ctx, u);
  // h(u+v) − ⟨z̄_V, u+v⟩ with ⟨z̄_V, u⟩ = 0
  return ctx.model.eval(ctx.point(u, s.v)) - ctx.anchor_v().dot(s.v);
}

GradientEstimate grad_L(const ULagContext& ctx, const Vec& u, double fd_step) {
  const int k = ctx.dim_u();
  const double h = fd_step > 0.0 ? fd_step : 1e-5 * (1.0 + u.norm());
  if (u.norm() + h > ctx.eps) throw PreconditionFailed("u is not interior to the U-ball");
  GradientEstimate out;
  out.z_u = Vec::Zero(k);
  for (int i = 0; i < k; ++i) {
    Vec up = u, um = u;
    up(i) += h;
    um(i) -= h;
    out.z_u(i) = (L_eps(ctx, up) - L_eps(ctx, um)) / (2.0 * h);
  }
  const VSelection s = v_of_u(ctx, u);
  const Vec x = ctx.point(u, s.v);
  const SubdifferentialPolytope poly = subdifferential_polytope(ctx.model, x, 1e-7);
  Vec z = ctx.v_basis * ctx.anchor_v();
  if (k) z += ctx.u_basis * out.z_u;
  out.hull_distance = project_onto_hull(poly.generators, z).distance;
  if (out.hull_distance > 1e-5)
    throw InconsistentGradient("finite-difference gradient is " + std::to_string(out.hull_distance) +
                               " away from co of the subdifferential");
  return out;
}

ConvexityReport convexity_check(const ULagContext& ctx, const std::vector<Vec>& u_grid) {
  ConvexityReport rep;
  std::vector<double> vals;
  for (const Vec& u : u_grid) vals.push_back(L_eps(ctx, u));
  double mx = 0.0;
  for (double v : vals)
    if (std::isfinite(v)) mx = std::max(mx, std::abs(v));
  rep.scale = 1.0 + mx;
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    for (std::size_t j = i + 1; j < u_grid.size(); ++j) {
      if (!std::isfinite(vals[i]) || !std::isfinite(vals[j])) continue;
      const double mid = L_eps(ctx, 0.5 * (u_grid[i] + u_grid[j]));
      rep.worst = std::max(rep.worst, mid - 0.5 * (vals[i] + vals[j]));
      ++rep.pairs;
    }
  }
  return rep;
}

std::vector<double> little_oh_check(const ULagContext& ctx, const std::vector<double>& radii) {
  std::vector<double> out;
  const auto dirs = unit_directions(ctx.dim_u(), 16);
  for (double r : radii) {
    double worst = 0.0;
    for (const Vec& d : dirs) {
      const VSelection s = v_of_u(ctx, r * d);
      worst = std::max(worst, s.v.norm() / r);
    }
    out.push_back(worst);
  }
  return out;
}

std::vector<Vec> u_lattice(int k, double radius, int resolution) {
  std::vector<Vec> out;
  if (k == 0) {
    out.emplace_back(0);
    return out;
  }
  std::size_t total = 1;
  for (int a = 0; a < k; ++a) total *= static_cast<std::size_t>(resolution);
  for (std::size_t f = 0; f < total; ++f) {
    Vec u(k);
    std::size_t rem = f;
    for (int a = k - 1; a >= 0; --a) {
      const auto i = static_cast<double>(rem % static_cast<std::size_t>(resolution));
      rem /= static_cast<std::size_t>(resolution);
      u(a) = resolution > 1 ? -radius + 2.0 * radius * i / (resolution - 1) : 0.0;
    }
    if (u.norm() <= radius * (1.0 + 1e-12)) out.push_back(u);
  }
  return out;
}

}  // namespace vulab
