#include "vulab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"
#include "vulab/parallel.hpp"
#include "vulab/small_lp.hpp"
#include "vulab/ulag.hpp"

namespace vulab {

std::size_t GridFunction::size() const {
  std::size_t s = 1;
  for (int r : resolution) s *= static_cast<std::size_t>(r);
  return s;
}

double GridFunction::spacing(int axis) const {
  const int r = resolution[static_cast<std::size_t>(axis)];
  return r > 1 ? (upper(axis) - lower(axis)) / (r - 1) : 0.0;
}

std::vector<int> GridFunction::multi_index(std::size_t flat) const {
  std::vector<int> idx(resolution.size());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto r = static_cast<std::size_t>(resolution[static_cast<std::size_t>(a)]);
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % r);
    flat /= r;
  }
  return idx;
}

std::size_t GridFunction::flat_index(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim(); ++a)
    f = f * static_cast<std::size_t>(resolution[static_cast<std::size_t>(a)]) +
        static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
  return f;
}

Vec GridFunction::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) {
    const int r = resolution[static_cast<std::size_t>(a)];
    x(a) = r > 1 ? lower(a) + (upper(a) - lower(a)) * idx[static_cast<std::size_t>(a)] / (r - 1)
                 : lower(a);
  }
  return x;
}

GridFunction sample_grid(const std::function<double(const Vec&)>& f, const Vec& lower,
                         const Vec& upper, const std::vector<int>& resolution) {
  GridFunction gf;
  gf.lower = lower;
  gf.upper = upper;
  gf.resolution = resolution;
  gf.values.assign(gf.size(), 0.0);
  parallel_for(gf.size(), [&](std::size_t i) { gf.values[i] = f(gf.node(i)); });
  return gf;
}

namespace {

struct EpigraphLp {
  Mat a;  // rows: coordinates, then ones
  Vec c;
  std::vector<std::size_t> nodes;
};

EpigraphLp build_lp(const GridFunction& gf) {
  if (gf.dim() > 3) throw DimensionTooLarge(fmt::format("dimension {} exceeds 3", gf.dim()));
  EpigraphLp lp;
  for (std::size_t i = 0; i < gf.size(); ++i)
    if (std::isfinite(gf.values[i])) lp.nodes.push_back(i);
  const int d = gf.dim();
  lp.a.resize(d + 1, static_cast<Eigen::Index>(lp.nodes.size()));
  lp.c.resize(static_cast<Eigen::Index>(lp.nodes.size()));
  for (std::size_t k = 0; k < lp.nodes.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    lp.a.col(col).head(d) = gf.node(lp.nodes[k]);
    lp.a(d, col) = 1.0;
    lp.c(col) = gf.values[lp.nodes[k]];
  }
  return lp;
}

Vec rhs_for(const Vec& x) {
  Vec b(x.size() + 1);
  b << x, 1.0;
  return b;
}

}  // namespace

GridFunction convex_envelope(const GridFunction& gf) {
  const EpigraphLp lp = build_lp(gf);
  GridFunction out = gf;
  if (lp.nodes.empty()) return out;
  const std::size_t total = gf.size();
  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (total + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t blk) {
    std::vector<int> basis;
    for (std::size_t i = blk * kBlock; i < std::min(total, (blk + 1) * kBlock); ++i) {
      const LpResult r = solve_lp(lp.a, rhs_for(gf.node(i)), lp.c, basis.empty() ? nullptr : &basis);
      if (r.feasible) {
        // an envelope never exceeds the function at a node
        out.values[i] = std::isfinite(gf.values[i]) ? std::min(r.value, gf.values[i]) : r.value;
        basis = r.basis;
      } else {
        out.values[i] = kInf;
      }
    }
  });
  return out;
}

double envelope_at(const GridFunction& gf, const Vec& point) {
  const EpigraphLp lp = build_lp(gf);
  if (lp.nodes.empty()) return kInf;
  const LpResult r = solve_lp(lp.a, rhs_for(point), lp.c);
  return r.feasible ? r.value : kInf;
}

ConjugateValue conjugate_at(const GridFunction& gf, const Vec& z) {
  ConjugateValue out;
  for (std::size_t i = 0; i < gf.size(); ++i) {
    const double h = gf.values[i];
    if (!std::isfinite(h)) continue;
    const double s = z.dot(gf.node(i)) - h;
    if (s > out.value) {
      out.value = s;
      out.argmax = i;
    }
  }
  if (std::isfinite(out.value)) {
    const auto idx = gf.multi_index(out.argmax);
    for (int a = 0; a < gf.dim(); ++a) {
      const int k = idx[static_cast<std::size_t>(a)];
      if (k == 0 || k == gf.resolution[static_cast<std::size_t>(a)] - 1) out.boundary = true;
    }
  }
  return out;
}

double conjugate_refined_at(const GridFunction& gf, const Vec& z) {
  const ConjugateValue cv = conjugate_at(gf, z);
  if (!std::isfinite(cv.value) || cv.boundary) return cv.value;
  const int d = gf.dim();
  const auto center = gf.multi_index(cv.argmax);
  Vec h(d);
  for (int a = 0; a < d; ++a) h(a) = gf.spacing(a);
  // φ(s) = c + gᵀs + ½sᵀHs in stencil units s ∈ {−1,0,1}ᵈ
  const int params = 1 + d + d * (d + 1) / 2;
  const auto stencil = ternary_lattice(d);
  Mat design(static_cast<Eigen::Index>(stencil.size()), params);
  Vec rhs(static_cast<Eigen::Index>(stencil.size()));
  for (std::size_t r = 0; r < stencil.size(); ++r) {
    std::vector<int> idx = center;
    for (int a = 0; a < d; ++a) idx[static_cast<std::size_t>(a)] += static_cast<int>(stencil[r](a));
    const std::size_t flat = gf.flat_index(idx);
    const double hv = gf.values[flat];
    if (!std::isfinite(hv)) return cv.value;
    const auto row = static_cast<Eigen::Index>(r);
    rhs(row) = z.dot(gf.node(flat)) - hv;
    int col = 0;
    design(row, col++) = 1.0;
    for (int a = 0; a < d; ++a) design(row, col++) = stencil[r](a);
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b)
        design(row, col++) = (a == b ? 0.5 : 1.0) * stencil[r](a) * stencil[r](b);
  }
  const Vec coef = design.colPivHouseholderQr().solve(rhs);
  Vec g = coef.segment(1, d);
  Mat hess(d, d);
  int col = 1 + d;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      hess(a, b) = coef(col++);
      hess(b, a) = hess(a, b);
    }
  Eigen::SelfAdjointEigenSolver<Mat> es(hess);
  if (es.eigenvalues().maxCoeff() >= 0.0) return cv.value;
  const Vec s = -hess.ldlt().solve(g);
  if (s.cwiseAbs().maxCoeff() > 1.0) return cv.value;
  return std::max(cv.value, coef(0) + 0.5 * g.dot(s));
}

GridFunction legendre(const GridFunction& gf, const Vec& dual_lower, const Vec& dual_upper,
                      const std::vector<int>& dual_resolution) {
  GridFunction out;
  out.lower = dual_lower;
  out.upper = dual_upper;
  out.resolution = dual_resolution;
  out.values.assign(out.size(), 0.0);
  // finite primal nodes as a matrix so each dual value is one product
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < gf.size(); ++i)
    if (std::isfinite(gf.values[i])) nodes.push_back(i);
  Mat p(gf.dim(), static_cast<Eigen::Index>(nodes.size()));
  Vec hv(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    p.col(static_cast<Eigen::Index>(k)) = gf.node(nodes[k]);
    hv(static_cast<Eigen::Index>(k)) = gf.values[nodes[k]];
  }
  parallel_for(out.size(), [&](std::size_t i) {
    out.values[i] = nodes.empty() ? -kInf : (p.transpose() * out.node(i) - hv).maxCoeff();
  });
  return out;
}

double cell_oscillation(const GridFunction& gf, const Vec& point) {
  const int d = gf.dim();
  std::vector<int> base(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const int r = gf.resolution[static_cast<std::size_t>(a)];
    const double h = gf.spacing(a);
    int k = h > 0 ? static_cast<int>(std::floor((point(a) - gf.lower(a)) / h)) : 0;
    base[static_cast<std::size_t>(a)] = std::clamp(k, 0, std::max(0, r - 2));
  }
  double lo = kInf, hi = -kInf;
  for (int corner = 0; corner < (1 << d); ++corner) {
    std::vector<int> idx = base;
    for (int a = 0; a < d; ++a) {
      const int r = gf.resolution[static_cast<std::size_t>(a)];
      if ((corner >> a) & 1) idx[static_cast<std::size_t>(a)] = std::min(idx[static_cast<std::size_t>(a)] + 1, r - 1);
    }
    const double v = gf.values[gf.flat_index(idx)];
    if (!std::isfinite(v)) return kInf;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

std::string to_csv(const GridFunction& gf) {
  std::ostringstream out;
  out << "dim," << gf.dim() << "\n";
  auto row = [&](const char* label, auto get) {
    out << label;
    for (int a = 0; a < gf.dim(); ++a) out << "," << get(a);
    out << "\n";
  };
  row("lower", [&](int a) { return fmt::format("{:.17g}", gf.lower(a)); });
  row("upper", [&](int a) { return fmt::format("{:.17g}", gf.upper(a)); });
  row("resolution", [&](int a) { return std::to_string(gf.resolution[static_cast<std::size_t>(a)]); });
  for (double v : gf.values) out << fmt::format("{:.17g}", v) << "\n";
  return out.str();
}

GridFunction from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fields = [&](const std::string& label) {
    if (!std::getline(in, line)) throw ParseError("missing '" + label + "' line");
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.empty() || parts[0] != label) throw ParseError("expected '" + label + "' line");
    parts.erase(parts.begin());
    return parts;
  };
  auto to_double = [](const std::string& s) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ParseError("bad number '" + s + "'");
    }
  };
  GridFunction gf;
  const auto dimf = fields("dim");
  if (dimf.size() != 1) throw ParseError("bad dim line");
  const int d = static_cast<int>(to_double(dimf[0]));
  const auto lo = fields("lower");
  const auto hi = fields("upper");
  const auto res = fields("resolution");
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d ||
      static_cast<int>(res.size()) != d)
    throw ParseError("header arity does not match dim");
  gf.lower.resize(d);
  gf.upper.resize(d);
  for (int a = 0; a < d; ++a) {
    gf.lower(a) = to_double(lo[static_cast<std::size_t>(a)]);
    gf.upper(a) = to_double(hi[static_cast<std::size_t>(a)]);
    gf.resolution.push_back(static_cast<int>(to_double(res[static_cast<std::size_t>(a)])));
  }
  while (std::getline(in, line))
    if (!line.empty()) gf.values.push_back(to_double(line));
  if (gf.values.size() != gf.size()) throw ParseError("value count does not match resolution");
  return gf;
}

GridFunction frame_grid(const FunctionModel& model, const VUFrame& frame, double eps_v,
                        int resolution) {
  const int k = frame.dim_u();
  const int n = frame.dim();
  Vec lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const double r = a < k ? frame.eps : eps_v;
    lo(a) = -r;
    hi(a) = r;
  }
  return sample_grid(
      [&](const Vec& w) {
        const Vec wu = w.head(k);
        const Vec wv = w.tail(n - k);
        if (wu.norm() > frame.eps * (1.0 + 1e-12) || wv.norm() > eps_v * (1.0 + 1e-12)) return kInf;
        return model.eval(frame.x_bar + assemble(frame, wu, wv));
      },
      lo, hi, std::vector<int>(static_cast<std::size_t>(n), resolution));
}

AgreementReport envelope_agreement_check(const FunctionModel& model, const VUFrame& frame,
                                         double eps_v, const std::vector<Vec>& trace_points,
                                         int resolution) {
  const GridFunction h = frame_grid(model, frame, eps_v, resolution);
  AgreementReport rep;
  rep.spacing.resize(h.dim());
  for (int a = 0; a < h.dim(); ++a) rep.spacing(a) = h.spacing(a);
  rep.residuals.assign(trace_points.size(), 0.0);
  rep.grid_errors.assign(trace_points.size(), 0.0);
  const EpigraphLp lp = build_lp(h);
  parallel_for(trace_points.size(), [&](std::size_t i) {
    const Vec& w = trace_points[i];
    const int k = frame.dim_u();
    const double hv = model.eval(frame.x_bar + assemble(frame, w.head(k), w.tail(w.size() - k)));
    const LpResult r = solve_lp(lp.a, rhs_for(w), lp.c);
    const double env = r.feasible ? std::min(r.value, hv) : kInf;
    rep.residuals[i] = std::abs(env - hv);
    rep.grid_errors[i] = cell_oscillation(h, w);
  });
  for (std::size_t i = 0; i < trace_points.size(); ++i) {
    rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
    rep.max_grid_error = std::max(rep.max_grid_error, rep.grid_errors[i]);
    if (rep.residuals[i] > 2.0 * rep.grid_errors[i] + 1e-12) rep.within_bound = false;
  }
  return rep;
}

ConjugacyReport conjugacy_identity_check(const ULagContext& ctx, const std::vector<Vec>& z_u_grid,
                                         int resolution) {
  const int k = ctx.dim_u();
  if (k < 1 || k > 2) throw DimensionTooLarge("conjugacy check supports dim U' in {1,2}");
  const int n = ctx.frame.dim();
  if (n > 3) throw DimensionTooLarge("conjugacy check supports n <= 3");
  // k_v on the U'-grid
  Vec lo = Vec::Constant(k, -ctx.eps), hi = Vec::Constant(k, ctx.eps);
  const GridFunction kv = sample_grid(
      [&](const Vec& u) { return u.norm() > ctx.eps * (1.0 + 1e-12) ? kInf : k_v(ctx, u); }, lo, hi,
      std::vector<int>(static_cast<std::size_t>(k), resolution));
  // h on U'-ball × V'-ball in (u, v) coordinates
  const int m = ctx.dim_v();
  Vec hlo(k + m), hhi(k + m);
  for (int a = 0; a < k + m; ++a) {
    const double r = a < k ? ctx.eps : ctx.eps_v;
    hlo(a) = -r;
    hhi(a) = r;
  }
  const int hres = (k + m) <= 2 ? resolution : std::min(resolution, 61);
  const GridFunction h = sample_grid(
      [&](const Vec& w) {
        const Vec u = w.head(k);
        const Vec v = w.tail(m);
        if (u.norm() > ctx.eps * (1.0 + 1e-12) || v.norm() > ctx.eps_v * (1.0 + 1e-12)) return kInf;
        return ctx.model.eval(ctx.point(u, v));
      },
      hlo, hhi, std::vector<int>(static_cast<std::size_t>(k + m), hres));
  ConjugacyReport rep;
  rep.z_grid = z_u_grid;
  const Vec zv = ctx.anchor_v();
  for (const Vec& z : z_u_grid) {
    const ConjugateValue a = conjugate_at(kv, z);
    Vec full(k + m);
    full << z, zv;
    const ConjugateValue b = conjugate_at(h, full);
    rep.lhs.push_back(a.value);
    rep.rhs.push_back(b.value);
    rep.boundary_supremum = rep.boundary_supremum || a.boundary || b.boundary;
    rep.max_residual = std::max(rep.max_residual, std::abs(a.value - b.value));
  }
  return rep;
}

}  // namespace vulab
