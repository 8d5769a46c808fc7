#include "vulab/jet2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "vulab/envelope.hpp"
#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"
#include "vulab/parallel.hpp"

namespace vulab {

std::vector<double> geometric_grid(double start, double ratio, int count) {
  std::vector<double> g;
  double t = start;
  for (int k = 0; k < count; ++k, t *= ratio) g.push_back(t);
  return g;
}

double delta2(const FunctionModel& model, const Vec& x, const Vec& z, double t, const Vec& u) {
  if (t == 0.0) throw PreconditionFailed("t must be nonzero");
  const double ft = model.eval(x + t * u);
  if (!std::isfinite(ft)) return kInf;
  return 2.0 * (ft - model.eval(x) - t * z.dot(u)) / (t * t);
}

namespace {

double quotient(const FunctionModel& model, const Vec& x, double fx, const Vec& z, double t,
                const Vec& u) {
  const double ft = model.eval(x + t * u);
  if (!std::isfinite(ft)) return kInf;
  return 2.0 * (ft - fx - t * z.dot(u)) / (t * t);
}

std::vector<Vec> perturbed(const Vec& h, double t, double ball) {
  std::vector<Vec> out{h};
  const double nh = h.norm();
  if (nh == 0.0) return out;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    for (double s : {1.0, -1.0}) {
      Vec p = h;
      p(i) += s * ball * t * nh;
      out.push_back(p * (nh / p.norm()));
    }
  }
  return out;
}

double shell_min(const FunctionModel& model, const Vec& x, double fx, const Vec& z, double t,
                 const Vec& h, const Jet2Config& cfg) {
  double best = kInf;
  for (const Vec& p : perturbed(h, t, cfg.dir_ball)) best = std::min(best, quotient(model, x, fx, z, t, p));
  return best;
}

struct Neighbour {
  Vec x;
  Vec z;
  double fx;
};

std::vector<Vec> neighbour_offsets(int n) {
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i)
    for (double s : {1.0, -1.0}) {
      Vec d = Vec::Zero(n);
      d(i) = s;
      out.push_back(d);
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (double si : {1.0, -1.0})
        for (double sj : {1.0, -1.0}) {
          Vec d = Vec::Zero(n);
          d(i) = si;
          d(j) = sj;
          out.push_back(d / std::sqrt(2.0));
        }
  return out;
}

// (x, z) itself, then nearby points with subgradients pulled toward z.
std::vector<Neighbour> neighbours(const FunctionModel& model, const Vec& x, const Vec& z, double t,
                                  const Jet2Config& cfg) {
  std::vector<Neighbour> out{{x, z, model.eval(x)}};
  const double rho = cfg.neighbour_scale * t;
  for (const Vec& d : neighbour_offsets(model.dim)) {
    const Vec xk = x + rho * d;
    const SubdifferentialPolytope poly = subdifferential_polytope(model, xk, cfg.tau);
    const Vec p = project_onto_hull(poly.generators, z).point;
    Vec c = Vec::Zero(model.dim);
    for (const Vec& g : poly.generators) c += g;
    c /= static_cast<double>(poly.generators.size());
    std::vector<Vec> zs;
    add_unique(zs, p);
    add_unique(zs, p + 0.5 * (c - p));
    const double fk = model.eval(xk);
    for (const Vec& zk : zs)
      if ((zk - z).norm() <= cfg.z_radius) out.push_back({xk, zk, fk});
  }
  return out;
}

ShellValue classify(std::vector<double> t, std::vector<double> trace, const Jet2Config& cfg) {
  ShellValue out;
  out.t = std::move(t);
  out.trace = std::move(trace);
  const std::size_t n = out.trace.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.finest_shells), n);
  if (n == 0) return out;
  const double finest = out.trace.back();
  bool increasing = true;
  for (std::size_t i = n - k + 1; i < n; ++i) increasing = increasing && out.trace[i] > out.trace[i - 1];
  if (!std::isfinite(finest) || (finest > cfg.divergence_threshold && increasing)) {
    out.divergent = true;
    out.value = kInf;
    return out;
  }
  out.value = kInf;
  for (std::size_t i = n - k; i < n; ++i) out.value = std::min(out.value, out.trace[i]);
  return out;
}

}  // namespace

ShellValue dini_second(const FunctionModel& model, const Vec& x, const Vec& z, const Vec& h,
                       const Jet2Config& cfg) {
  const double fx = model.eval(x);
  std::vector<double> trace;
  for (double t : cfg.t_grid) trace.push_back(shell_min(model, x, fx, z, t, h, cfg));
  return classify(cfg.t_grid, std::move(trace), cfg);
}

ShellValue rank1_support(const FunctionModel& model, const Vec& x, const Vec& z, const Vec& h,
                         const Jet2Config& cfg) {
  std::vector<double> trace;
  for (double t : cfg.t_grid) {
    double sup = -kInf;
    for (const Neighbour& nb : neighbours(model, x, z, t, cfg)) {
      const double v = std::min(shell_min(model, nb.x, nb.fx, nb.z, t, h, cfg),
                                shell_min(model, nb.x, nb.fx, nb.z, t, -h, cfg));
      sup = std::max(sup, v);
    }
    trace.push_back(sup);
  }
  return classify(cfg.t_grid, std::move(trace), cfg);
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Member:
      return "member";
    case Membership::Rejected:
      return "rejected";
    case Membership::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

MembershipResult subjet_membership(const FunctionModel& model, const JetCandidate& cand,
                                   const MembershipConfig& cfg) {
  if ((cand.q - cand.q.transpose()).norm() > 1e-12 * (1.0 + cand.q.norm()))
    throw PreconditionFailed("Q must be symmetric");
  const double fx = model.eval(cand.x);
  const auto dirs = unit_directions(model.dim, cfg.directions);
  const double noise = 10.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
  MembershipResult out;
  std::vector<std::vector<bool>> failed;
  std::vector<std::vector<double>> margins;
  for (double r : cfg.radii) {
    const double eta = cfg.eta_c * std::sqrt(r) + noise / (r * r);
    std::vector<bool> f(dirs.size(), false);
    std::vector<double> m(dirs.size(), 0.0);
    double worst = kInf;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Vec d = r * dirs[i];
      m[i] = (model.eval(cand.x + d) - fx - cand.z.dot(d) - 0.5 * d.dot(cand.q * d)) / (r * r);
      f[i] = m[i] < -eta;
      worst = std::min(worst, m[i]);
    }
    out.shell_margins.push_back(worst);
    out.shell_slack.push_back(eta);
    failed.push_back(std::move(f));
    margins.push_back(std::move(m));
  }
  const std::size_t n = failed.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.finest_shells), n);
  bool all_pass = true;
  for (std::size_t s = n - k; s < n; ++s)
    for (bool b : failed[s]) all_pass = all_pass && !b;
  if (all_pass) {
    out.verdict = Membership::Member;
    return out;
  }
  double worst = kInf;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    bool persistent = true;
    for (std::size_t s = n - k; s < n; ++s) persistent = persistent && failed[s][i];
    if (persistent && margins[n - 1][i] < worst) {
      worst = margins[n - 1][i];
      out.witness = dirs[i];
    }
  }
  out.verdict = out.witness ? Membership::Rejected : Membership::Inconclusive;
  return out;
}

SecondOrderComponent second_order_component(const FunctionModel& model, const Vec& x_bar,
                                            const Vec& z_bar, int dir_count, const Jet2Config& cfg,
                                            const Mat* u_basis) {
  const SubdifferentialPolytope poly = subdifferential_polytope(model, x_bar, cfg.tau);
  if (!in_hull(poly.generators, z_bar, 1e-8)) throw PreconditionFailed("z̄ is not in co ∂f(x̄)");
  SecondOrderComponent out;
  out.profile.directions = unit_directions(model.dim, dir_count);
  out.profile.divergence_threshold = cfg.divergence_threshold;
  out.profile.t_grid = cfg.t_grid;
  out.profile.values.resize(out.profile.directions.size());
  parallel_for(out.profile.directions.size(), [&](std::size_t i) {
    out.profile.values[i] = rank1_support(model, x_bar, z_bar, out.profile.directions[i], cfg);
  });

  std::vector<Vec> finite;
  for (std::size_t i = 0; i < out.profile.directions.size(); ++i)
    if (!out.profile.values[i].divergent) finite.push_back(out.profile.directions[i]);
  const int n = model.dim;
  if (finite.empty()) {
    out.u2_basis = Mat(n, 0);
  } else {
    Mat f(n, static_cast<Eigen::Index>(finite.size()));
    for (std::size_t i = 0; i < finite.size(); ++i) f.col(static_cast<Eigen::Index>(i)) = finite[i];
    Eigen::JacobiSVD<Mat> svd(f, Eigen::ComputeFullU);
    const Vec s = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-6 * s(0)) ++rank;
    out.u2_basis = svd.matrixU().leftCols(rank);
    canonicalize_signs(out.u2_basis);
    out.u2_basis = out.u2_basis.unaryExpr([](double a) { return std::abs(a) < 1e-14 ? 0.0 : a; });
  }
  for (std::size_t i = 0; i < out.profile.directions.size(); ++i) {
    if (!out.profile.values[i].divergent) continue;
    if (out.u2_basis.cols() > 0 && angle_to_subspace(out.profile.directions[i], out.u2_basis) <= 1e-6)
      throw NotASubspace("a direction inside the span of the finite set is divergent");
  }
  if (u_basis) {
    for (Eigen::Index j = 0; j < out.u2_basis.cols(); ++j)
      out.angle_to_u = std::max(out.angle_to_u, angle_to_subspace(out.u2_basis.col(j), *u_basis));
    out.inside_u = out.angle_to_u <= 1e-6;
  }
  return out;
}

std::string to_string(HessianSource s) {
  switch (s) {
    case HessianSource::Analytic:
      return "analytic";
    case HessianSource::FiniteDifference:
      return "finite_difference";
    case HessianSource::Moreau:
      return "moreau";
  }
  return "analytic";
}

HessianBundle limiting_hessians(const FunctionModel& model, const Vec& x_bar, const Vec& z_bar,
                                const HessianSampleConfig& cfg) {
  HessianBundle bundle;
  const bool moreau = model.name.rfind("moreau(", 0) == 0;
  bool any_fd = false;
  std::vector<const SmoothPiece*> flat;
  for (const auto& b : model.form())
    for (const auto& p : b) flat.push_back(&p);
  for (double r : cfg.radii) {
    for (const Vec& d : unit_directions(model.dim, cfg.directions)) {
      const Vec x = x_bar + r * d;
      const ActiveSet act = active_set(model, x);
      if (act.indices.size() != 1) continue;
      const int idx = act.indices.front();
      const double step = cfg.fd_rel * (1.0 + x.norm());
      bool smooth_here = true;
      for (int i = 0; i < model.dim && smooth_here; ++i) {
        for (double s : {1.0, -1.0}) {
          Vec xs = x;
          xs(i) += s * step;
          const ActiveSet a2 = active_set(model, xs);
          if (a2.indices.size() != 1 || a2.indices.front() != idx) smooth_here = false;
        }
      }
      if (!smooth_here) continue;
      const SmoothPiece& p = *flat[static_cast<std::size_t>(idx)];
      if ((p.gradient(x) - z_bar).norm() > cfg.gradient_tol) continue;
      Mat h;
      if (p.has_hessian()) {
        h = symmetrize(p.hessian(x));
      } else {
        h = fd_hessian_from_gradient(p.gradient, x, step);
        any_fd = true;
      }
      bundle.samples.push_back({x, h});
    }
  }
  if (bundle.samples.empty()) throw EmptyBundle("no differentiable sample points near the base point");
  bundle.source = moreau ? HessianSource::Moreau
                         : any_fd ? HessianSource::FiniteDifference : HessianSource::Analytic;
  return bundle;
}

std::vector<Vec> coderivative_c11(const HessianBundle& bundle, const Vec& h) {
  if (bundle.samples.empty()) throw EmptyBundle("empty bundle");
  std::vector<Vec> out;
  for (const auto& s : bundle.samples) add_unique(out, s.hessian * h, 1e-12);
  return out;
}

double coderivative_support(const HessianBundle& bundle, const Vec& h) {
  double best = -kInf;
  for (const auto& s : bundle.samples) best = std::max(best, h.dot(s.hessian * h));
  return best;
}

double tilt_criterion_c11(const HessianBundle& bundle, int dir_count) {
  if (bundle.samples.empty()) throw EmptyBundle("empty bundle");
  double beta = kInf;
  const int n = static_cast<int>(bundle.samples.front().hessian.rows());
  const auto dirs = unit_directions(n, dir_count);
  for (const auto& s : bundle.samples) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s.hessian);
    beta = std::min(beta, es.eigenvalues().minCoeff());
    for (const Vec& h : dirs) beta = std::min(beta, h.dot(s.hessian * h));
  }
  return beta;
}

MoreauValue moreau_envelope(const FunctionModel& model, double lambda, const Vec& x,
                            const SolverConfig& cfg) {
  if (!(lambda > 0.0)) throw PreconditionFailed("lambda must be positive");
  if (model.flags.quadratic_minorant && model.flags.quadratic_minorant->r >= 1.0 / lambda)
    throw LambdaTooLarge(fmt::format("minorant modulus {} is not below 1/lambda = {}",
                                     model.flags.quadratic_minorant->r, 1.0 / lambda));
  const MinMaxForm form = add_terms(model.form(), Vec::Zero(model.dim), 1.0 / lambda, x);
  const Ball ball{x, 10.0 * (1.0 + x.norm())};
  Vec best;
  double best_val = kInf;
  int count = 1;
  if (model.flags.convex) {
    for (const auto& branch : form) {
      const LocalResult r = minimize_max(branch, x, ball, cfg);
      const double v = evaluate(form, r.x);
      if (v < best_val) {
        best_val = v;
        best = r.x;
      }
    }
  } else {
    const MultistartResult r = multistart_minimize(form, ball, cfg, {x});
    best = r.minimizers.front();
    best_val = r.value;
    count = static_cast<int>(r.minimizers.size());
  }
  if (ball.on_boundary(best)) throw LambdaTooLarge("proximal subproblem is unbounded at this lambda");
  MoreauValue out;
  out.prox = best;
  out.value = model.eval(best) + (x - best).squaredNorm() / (2.0 * lambda);
  out.gradient = (x - best) / lambda;
  out.prox_count = count;
  return out;
}

FunctionModel moreau_model(const FunctionModel& model, double lambda, const SolverConfig& cfg) {
  SmoothPiece p;
  p.value = [model, lambda, cfg](const Vec& x) { return moreau_envelope(model, lambda, x, cfg).value; };
  p.gradient = [model, lambda, cfg](const Vec& x) -> Vec {
    return moreau_envelope(model, lambda, x, cfg).gradient;
  };
  ModelFlags flags;
  flags.convex = model.flags.convex;
  flags.locally_lipschitz = true;
  FunctionModel m = make_min_max(fmt::format("moreau({},{})", model.name, lambda), model.dim, {{p}}, flags);
  m.base_point = model.base_point;
  m.default_radius = model.default_radius;
  return m;
}

ParaConvexityReport para_convexity_check(const RankOneProfile& profile, double r) {
  std::vector<Vec> dirs;
  std::vector<double> q;
  for (std::size_t i = 0; i < profile.directions.size(); ++i) {
    if (profile.values[i].divergent) continue;
    const Vec& h = profile.directions[i];
    dirs.push_back(h / h.norm());
    q.push_back(profile.values[i].value / h.squaredNorm());
  }
  auto extended = [&](const Vec& w) -> std::optional<double> {
    const double nw = w.norm();
    if (nw <= 1e-12) return 0.0;
    const Vec wh = w / nw;
    for (std::size_t k = 0; k < dirs.size(); ++k)
      if ((dirs[k] - wh).norm() <= 1e-9) return nw * nw * (q[k] + r);
    return std::nullopt;
  };
  ParaConvexityReport rep;
  const double scales[] = {0.5, 1.0, 2.0};
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i; j < dirs.size(); ++j) {
      for (double si : scales) {
        for (double sj : scales) {
          const Vec a = si * dirs[i];
          const Vec b = sj * dirs[j];
          const auto fm = extended(0.5 * (a + b));
          if (!fm) continue;
          const double fa = si * si * (q[i] + r);
          const double fb = sj * sj * (q[j] + r);
          rep.violation = std::max(rep.violation, *fm - 0.5 * (fa + fb));
          ++rep.pairs;
        }
      }
    }
  }
  return rep;
}

DualityReport hessian_duality_check(const FunctionModel& model, const Vec& x_bar, double fd_step,
                                    int resolution, double box_radius) {
  const ActiveSet act = active_set(model, x_bar);
  if (act.indices.size() != 1) throw PreconditionFailed("model is not differentiable at the base point");
  std::vector<const SmoothPiece*> flat;
  for (const auto& b : model.form())
    for (const auto& p : b) flat.push_back(&p);
  const SmoothPiece& piece = *flat[static_cast<std::size_t>(act.indices.front())];
  DualityReport rep;
  rep.z_bar = piece.gradient(x_bar);
  rep.q = fd_hessian_from_gradient(piece.gradient, x_bar, 1e-4 * (1.0 + x_bar.norm()));
  Eigen::SelfAdjointEigenSolver<Mat> es(rep.q);
  if (es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw SingularHessian("Hessian at the base point is not positive definite");
  const int n = model.dim;
  const int res = n <= 2 ? resolution : std::min(resolution, 61);
  const GridFunction gf = sample_grid([&](const Vec& x) { return model.eval(x); },
                                      x_bar.array() - box_radius, x_bar.array() + box_radius,
                                      std::vector<int>(static_cast<std::size_t>(n), res));
  auto fstar = [&](const Vec& z) { return conjugate_refined_at(gf, z); };
  const double d = fd_step;
  const double f0 = fstar(rep.z_bar);
  rep.conjugate_hessian = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = d;
    rep.conjugate_hessian(i, i) = (fstar(rep.z_bar + e) - 2.0 * f0 + fstar(rep.z_bar - e)) / (d * d);
    for (int j = i + 1; j < n; ++j) {
      Vec e2 = Vec::Zero(n);
      e2(j) = d;
      const double v = (fstar(rep.z_bar + e + e2) - fstar(rep.z_bar + e - e2) -
                        fstar(rep.z_bar - e + e2) + fstar(rep.z_bar - e - e2)) /
                       (4.0 * d * d);
      rep.conjugate_hessian(i, j) = v;
      rep.conjugate_hessian(j, i) = v;
    }
  }
  rep.residual = (rep.conjugate_hessian - rep.q.inverse()).norm();
  return rep;
}

double uniform_bound_check(const FunctionModel& model, const Vec& x_bar, const Vec& z_bar,
                           const Mat& u2_basis, const Jet2Config& cfg) {
  const int k = static_cast<int>(u2_basis.cols());
  if (k == 0) throw PreconditionFailed("U² is trivial");
  const double t = cfg.t_grid.back();
  std::vector<Vec> dirs = directions_in(u2_basis, 16);
  // polarized quotient matrix at (x̄, z̄) in U² coordinates
  Mat p(k, k);
  for (int i = 0; i < k; ++i) {
    p(i, i) = delta2(model, x_bar, z_bar, t, u2_basis.col(i));
    for (int j = i + 1; j < k; ++j) {
      const Vec bp = u2_basis.col(i) + u2_basis.col(j);
      const Vec bm = u2_basis.col(i) - u2_basis.col(j);
      p(i, j) = p(j, i) = (delta2(model, x_bar, z_bar, t, bp) - delta2(model, x_bar, z_bar, t, bm)) / 4.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  for (int i = 0; i < k; ++i) dirs.push_back(u2_basis * es.eigenvectors().col(i));
  double m = -kInf;
  for (const Neighbour& nb : neighbours(model, x_bar, z_bar, t, cfg))
    for (const Vec& h : dirs)
      m = std::max({m, quotient(model, nb.x, nb.fx, nb.z, t, h), quotient(model, nb.x, nb.fx, nb.z, t, -h)});
  return m;
}

std::string profile_to_csv(const RankOneProfile& profile) {
  std::ostringstream out;
  const int n = profile.directions.empty() ? 0 : static_cast<int>(profile.directions.front().size());
  for (int i = 0; i < n; ++i) out << "h" << i << ",";
  out << "classification,finest_value\n";
  for (std::size_t r = 0; r < profile.directions.size(); ++r) {
    for (int i = 0; i < n; ++i) out << fmt::format("{:.17g},", profile.directions[r](i));
    const ShellValue& v = profile.values[r];
    out << (v.divergent ? "divergent" : "finite") << ","
        << fmt::format("{:.17g}", v.trace.empty() ? v.value : v.trace.back()) << "\n";
  }
  return out.str();
}

}  // namespace vulab
