#include "vulab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"
#include "vulab/parallel.hpp"

namespace vulab {

namespace {

struct Lattice {
  std::vector<Vec> nodes;
  std::vector<std::vector<int>> index;
};

Lattice ball_lattice(int k, double radius, int res) {
  Lattice out;
  std::size_t total = 1;
  for (int a = 0; a < k; ++a) total *= static_cast<std::size_t>(res);
  for (std::size_t f = 0; f < total; ++f) {
    Vec u(k);
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::size_t rem = f;
    for (int a = k - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(res));
      rem /= static_cast<std::size_t>(res);
      u(a) = res > 1 ? -radius + 2.0 * radius * idx[static_cast<std::size_t>(a)] / (res - 1) : 0.0;
    }
    if (u.norm() <= radius * (1.0 + 1e-12)) {
      out.nodes.push_back(u);
      out.index.push_back(std::move(idx));
    }
  }
  return out;
}

ManifoldTrace fill(const ULagContext& ctx, double delta, int resolution, const TraceConfig& cfg) {
  ManifoldTrace tr;
  tr.ctx = ctx;
  tr.delta = delta;
  const int k = ctx.dim_u();
  const int m = ctx.dim_v();
  tr.resolution = k == 0 ? 1 : resolution;
  tr.spacing = (k == 0 || resolution < 2) ? 0.0 : 2.0 * delta / (resolution - 1);
  Lattice lat = ball_lattice(k, delta, tr.resolution);
  tr.u_nodes = std::move(lat.nodes);
  tr.lattice_index = std::move(lat.index);
  const std::size_t n = tr.u_nodes.size();
  tr.v_values.resize(n);
  tr.f_values.resize(n);
  tr.z_u_values.resize(n);
  tr.dv_values.resize(n);
  tr.diagnostics.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const Vec& u = tr.u_nodes[i];
    NodeDiagnostics& d = tr.diagnostics[i];
    const VSelection s = v_of_u(ctx, u);
    tr.v_values[i] = s.v;
    d.boundary_active = s.boundary_active;
    d.budget_exceeded = s.budget_exceeded;
    tr.f_values[i] = ctx.model.eval(ctx.point(u, s.v));
    d.consistency = std::abs(tr.f_values[i] - (s.value + ctx.anchor_v().dot(s.v)));
    Mat dv = Mat::Zero(m, k);
    for (int a = 0; a < k; ++a) {
      Vec up = u, um = u;
      up(a) += cfg.dv_step;
      um(a) -= cfg.dv_step;
      dv.col(a) = (v_of_u(ctx, up).v - v_of_u(ctx, um).v) / (2.0 * cfg.dv_step);
    }
    tr.dv_values[i] = dv;
    if (k == 0) {
      tr.z_u_values[i] = Vec(0);
      const SubdifferentialPolytope poly = subdifferential_polytope(ctx.model, ctx.point(u, s.v), 1e-7);
      d.hull_distance = project_onto_hull(poly.generators, ctx.v_basis * ctx.anchor_v()).distance;
      return;
    }
    const double h = 1e-5 * (1.0 + u.norm());
    if (u.norm() + h > ctx.eps) {
      d.rim = true;
      tr.z_u_values[i] = Vec::Constant(k, std::numeric_limits<double>::quiet_NaN());
      return;
    }
    const GradientEstimate g = grad_L(ctx, u, h);
    tr.z_u_values[i] = g.z_u;
    d.hull_distance = g.hull_distance;
  });
  return tr;
}

}  // namespace

ManifoldTrace trace(const ULagContext& ctx, double delta, int resolution, const TraceConfig& cfg) {
  if (delta <= 0.0) delta = ctx.eps / 4.0;
  if (delta > ctx.eps) throw PreconditionFailed(fmt::format("delta {} exceeds eps {}", delta, ctx.eps));
  if (resolution < 2 && ctx.dim_u() > 0) throw PreconditionFailed("trace resolution must be at least 2");
  int shrinks = 0;
  for (;;) {
    ManifoldTrace tr = fill(ctx, delta, resolution, cfg);
    tr.shrinks = shrinks;
    const bool boundary = std::any_of(tr.diagnostics.begin(), tr.diagnostics.end(),
                                      [](const NodeDiagnostics& d) { return d.boundary_active; });
    if (!boundary || shrinks >= cfg.max_shrinks) return tr;
    delta /= 2.0;
    ++shrinks;
  }
}

C11Report c11_check(const ManifoldTrace& tr) {
  C11Report rep;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!tr.usable(i)) continue;
    for (std::size_t j = i + 1; j < tr.size(); ++j) {
      if (!tr.usable(j)) continue;
      const double du = (tr.u_nodes[i] - tr.u_nodes[j]).norm();
      if (du == 0.0) continue;
      rep.lipschitz = std::max(rep.lipschitz, (tr.z_u_values[i] - tr.z_u_values[j]).norm() / du);
      ++rep.pairs;
    }
  }
  return rep;
}

C11Refinement c11_refinement(const ManifoldTrace& tr, const TraceConfig& cfg) {
  C11Refinement out;
  out.coarse = c11_check(tr).lipschitz;
  if (tr.ctx.dim_u() == 0) {
    out.fine = out.coarse;
  } else {
    TraceConfig fixed = cfg;
    fixed.max_shrinks = 0;
    out.fine = c11_check(trace(tr.ctx, tr.delta, 2 * (tr.resolution - 1) + 1, fixed)).lipschitz;
  }
  out.finite = std::isfinite(out.coarse) && std::isfinite(out.fine);
  if (out.coarse == 0.0 && out.fine == 0.0) {
    out.ratio = 1.0;
  } else {
    out.ratio = out.coarse > 0.0 ? out.fine / out.coarse : kInf;
  }
  out.stable = out.finite && std::abs(out.ratio - 1.0) <= 0.25;
  return out;
}

ChainReport grad_chain_check(const ManifoldTrace& tr, double tau) {
  ChainReport rep;
  const ULagContext& ctx = tr.ctx;
  rep.node_residuals.assign(tr.size(), 0.0);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!tr.usable(i)) continue;
    const Vec x = ctx.point(tr.u_nodes[i], tr.v_values[i]);
    const SubdifferentialPolytope poly = subdifferential_polytope(ctx.model, x, tau);
    const Mat& dv = tr.dv_values[i];
    const Vec grad_g = tr.z_u_values[i] + dv.transpose() * ctx.anchor_v();
    for (const Vec& s : poly.generators) {
      const Vec pairing = ctx.u_basis.transpose() * s + dv.transpose() * (ctx.v_basis.transpose() * s);
      const double r = (pairing - grad_g).norm();
      rep.node_residuals[i] = std::max(rep.node_residuals[i], r);
      ++rep.generators;
    }
    rep.max_residual = std::max(rep.max_residual, rep.node_residuals[i]);
  }
  return rep;
}

TaylorReport taylor_lower_check(const ManifoldTrace& tr, const Mat& q, const TaylorConfig& cfg) {
  TaylorReport rep;
  const ULagContext& ctx = tr.ctx;
  const int k = ctx.dim_u();
  const int m = ctx.dim_v();
  if (k == 0) {
    rep.worst_margin = 0.0;
    return rep;
  }
  if (q.rows() != k || q.cols() != k) throw PreconditionFailed("Q has the wrong size");
  const auto udirs = unit_directions(k, cfg.directions);
  std::vector<Vec> voffs{Vec::Zero(m)};
  for (double s : cfg.v_offsets) {
    if (s == 0.0) continue;
    for (int a = 0; a < m; ++a)
      for (double sg : {1.0, -1.0}) {
        Vec e = Vec::Zero(m);
        e(a) = sg * s * ctx.eps_v;
        voffs.push_back(e);
      }
  }
  std::vector<TaylorReport> per(tr.size());
  parallel_for(tr.size(), [&](std::size_t i) {
    TaylorReport& r = per[i];
    if (!tr.usable(i)) return;
    const Vec& u = tr.u_nodes[i];
    const Vec z = ctx.u_basis * tr.z_u_values[i] + ctx.v_basis * ctx.anchor_v();
    const Vec x0 = ctx.point(u, tr.v_values[i]);
    for (double rad : cfg.radii) {
      const double eta = cfg.eta_c * std::sqrt(rad);
      for (const Vec& d : udirs) {
        const Vec up = u + rad * d;
        if (up.norm() > ctx.eps) continue;
        const Vec vbase = v_of_u(ctx, up).v;
        for (const Vec& off : voffs) {
          const Vec vp = vbase + off;
          if (vp.norm() > ctx.eps_v) continue;
          const Vec x = ctx.point(up, vp);
          const Vec du = up - u;
          const double rhs = tr.f_values[i] + z.dot(x - x0) + 0.5 * du.dot(q * du) - eta * du.squaredNorm();
          const double margin = ctx.model.eval(x) - rhs;
          ++r.samples;
          if (margin < r.worst_margin) {
            r.worst_margin = margin;
            r.witness_u = up;
          }
        }
      }
    }
  });
  for (const auto& r : per) {
    rep.samples += r.samples;
    if (r.worst_margin < rep.worst_margin) {
      rep.worst_margin = r.worst_margin;
      rep.witness_u = r.witness_u;
    }
  }
  return rep;
}

CertifiedQ certified_q(const ULagContext& ctx, const Vec& u, double shrink) {
  const int k = ctx.dim_u();
  CertifiedQ out;
  if (k == 0) {
    out.q = Mat(0, 0);
    out.verdict = Membership::Member;
    return out;
  }
  auto l = [&ctx](const Vec& w) { return L_eps(ctx, w); };
  const double h = 1e-3;
  Mat hess(k, k);
  const double l0 = l(u);
  for (int a = 0; a < k; ++a) {
    Vec ea = Vec::Zero(k);
    ea(a) = h;
    hess(a, a) = (l(u + ea) - 2.0 * l0 + l(u - ea)) / (h * h);
    for (int b = a + 1; b < k; ++b) {
      Vec eb = Vec::Zero(k);
      eb(b) = h;
      hess(a, b) = hess(b, a) = (l(u + ea + eb) - l(u + ea - eb) - l(u - ea + eb) + l(u - ea - eb)) / (4.0 * h * h);
    }
  }
  out.q = hess - shrink * Mat::Identity(k, k);
  ModelFlags flags;
  const FunctionModel lag = make_custom("L", k, l, flags);
  MembershipConfig mc;
  mc.directions = 16;
  mc.radii = geometric_grid(0.05 * ctx.eps, 0.5, 6);
  out.verdict = subjet_membership(lag, {u, grad_L(ctx, u).z_u, out.q}, mc).verdict;
  return out;
}

double dv_max_jump(const ManifoldTrace& tr) {
  double jump = 0.0;
  const int k = tr.ctx.dim_u();
  if (k == 0) return 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    for (std::size_t j = i + 1; j < tr.size(); ++j) {
      int dist = 0;
      for (int a = 0; a < k; ++a)
        dist += std::abs(tr.lattice_index[i][static_cast<std::size_t>(a)] -
                         tr.lattice_index[j][static_cast<std::size_t>(a)]);
      if (dist != 1) continue;
      if (tr.diagnostics[i].boundary_active || tr.diagnostics[j].boundary_active) continue;
      jump = std::max(jump, (tr.dv_values[i] - tr.dv_values[j]).norm());
    }
  }
  return jump;
}

ContinuityReport dv_continuity_check(const ManifoldTrace& tr, int levels, const TraceConfig& cfg) {
  ContinuityReport rep;
  rep.resolutions.push_back(tr.resolution);
  rep.max_jump.push_back(dv_max_jump(tr));
  TraceConfig fixed = cfg;
  fixed.max_shrinks = 0;
  int res = tr.resolution;
  for (int l = 1; l < levels && tr.ctx.dim_u() > 0; ++l) {
    res = 2 * (res - 1) + 1;
    rep.resolutions.push_back(res);
    rep.max_jump.push_back(dv_max_jump(trace(tr.ctx, tr.delta, res, fixed)));
  }
  const std::size_t n = rep.max_jump.size();
  for (std::size_t i = 1; i < n; ++i)
    rep.decreasing = rep.decreasing && rep.max_jump[i] <= rep.max_jump[i - 1] + 1e-12;
  if (n >= 2) {
    const double prev = rep.max_jump[n - 2];
    rep.ratio = prev > 1e-12 ? rep.max_jump[n - 1] / prev : 0.0;
  }
  return rep;
}

std::string trace_to_csv(const ManifoldTrace& tr) {
  std::ostringstream out;
  const int k = tr.ctx.dim_u();
  const int m = tr.ctx.dim_v();
  for (int a = 0; a < k; ++a) out << "u" << a << ",";
  for (int a = 0; a < m; ++a) out << "v" << a << ",";
  out << "f,";
  for (int a = 0; a < k; ++a) out << "zU" << a << ",";
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < k; ++c) out << "dv" << r << "_" << c << ",";
  out << "boundary_active,rim\n";
  auto num = [](double x) { return fmt::format("{:.17g}", x); };
  for (std::size_t i = 0; i < tr.size(); ++i) {
    for (int a = 0; a < k; ++a) out << num(tr.u_nodes[i](a)) << ",";
    for (int a = 0; a < m; ++a) out << num(tr.v_values[i](a)) << ",";
    out << num(tr.f_values[i]) << ",";
    for (int a = 0; a < k; ++a) out << num(tr.z_u_values[i](a)) << ",";
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < k; ++c) out << num(tr.dv_values[i](r, c)) << ",";
    out << (tr.diagnostics[i].boundary_active ? 1 : 0) << "," << (tr.diagnostics[i].rim ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace vulab
