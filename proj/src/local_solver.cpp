#include "vulab/local_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "vulab/linalg.hpp"

namespace vulab {

Vec Ball::project(const Vec& x) const {
  if (!std::isfinite(radius)) return x;
  Vec d = x - center;
  const double nd = d.norm();
  if (nd <= radius) return x;
  return center + d * (radius / nd);
}

bool Ball::on_boundary(const Vec& x, double rel) const {
  if (!std::isfinite(radius)) return false;
  return (x - center).norm() >= radius * (1.0 - rel);
}

namespace {

struct QpSolution {
  Vec d;
  Vec lambda;
};

// min over d of max_i(φ_i + g_iᵀd) + ½dᵀHd, H positive definite.
QpSolution solve_minimax_qp(const Vec& phi, const Mat& g, const Mat& h) {
  const int m = static_cast<int>(phi.size());
  const int n = static_cast<int>(g.rows());
  Eigen::LLT<Mat> llt(h);
  const Mat hinv_g = llt.solve(g);
  const Mat mm = g.transpose() * hinv_g;

  QpSolution best;
  double best_obj = kInf;
  const int max_size = std::min(m, n + 1);
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const int k = std::popcount(mask);
    if (k > max_size) continue;
    std::vector<int> idx;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    Mat kkt = Mat::Zero(k + 1, k + 1);
    Vec rhs(k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) kkt(a, b) = mm(idx[a], idx[b]);
      kkt(a, k) = 1.0;
      kkt(k, a) = 1.0;
      rhs(a) = phi(idx[a]);
    }
    rhs(k) = 1.0;
    Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) continue;
    Vec lam = Vec::Zero(m);
    bool ok = true;
    for (int a = 0; a < k; ++a) {
      if (sol(a) < -1e-12) {
        ok = false;
        break;
      }
      lam(idx[a]) = std::max(0.0, sol(a));
    }
    if (!ok) continue;
    const double s = lam.sum();
    if (s <= 0.0) continue;
    lam /= s;
    Vec d = -hinv_g * lam;
    const double obj = (phi + g.transpose() * d).maxCoeff() + 0.5 * d.dot(h * d);
    if (obj < best_obj - 1e-15 * (1.0 + std::abs(obj))) {
      best_obj = obj;
      best.d = d;
      best.lambda = lam;
    }
  }
  if (best.d.size() == 0) {
    best.d = Vec::Zero(n);
    best.lambda = Vec::Zero(m);
    Eigen::Index arg = 0;
    phi.maxCoeff(&arg);
    best.lambda(arg) = 1.0;
  }
  return best;
}

double max_value(const std::vector<SmoothPiece>& pieces, const Vec& x) {
  return evaluate_branch(pieces, x);
}

}  // namespace

LocalResult minimize_max(const std::vector<SmoothPiece>& pieces, const Vec& x0, const Ball& ball,
                         const SolverConfig& cfg) {
  const int m = static_cast<int>(pieces.size());
  const auto n = x0.size();
  LocalResult res;
  Vec x = ball.project(x0);
  Vec lam_prev;  // multipliers over all pieces
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    Vec phi(m);
    Mat g(n, m);
    for (int i = 0; i < m; ++i) {
      phi(i) = pieces[i].value(x);
      g.col(i) = pieces[i].gradient(x);
    }
    const double f = phi.maxCoeff();

    std::vector<int> work(m);
    std::iota(work.begin(), work.end(), 0);
    if (m > cfg.working_set) {
      std::stable_sort(work.begin(), work.end(), [&](int a, int b) { return phi(a) > phi(b); });
      work.resize(cfg.working_set);
      std::sort(work.begin(), work.end());
    }
    if (lam_prev.size() != m) {
      lam_prev = Vec::Zero(m);
      Eigen::Index arg = 0;
      phi.maxCoeff(&arg);
      lam_prev(arg) = 1.0;
    }
    Mat h = Mat::Zero(n, n);
    for (int i : work)
      if (lam_prev(i) > 0.0) h += lam_prev(i) * pieces[i].hessian_at(x);
    const double scale = std::max(1.0, h.norm());
    h = positive_definite_modification(h, cfg.hessian_floor * scale);

    const int w = static_cast<int>(work.size());
    Vec wphi(w);
    Mat wg(n, w);
    for (int a = 0; a < w; ++a) {
      wphi(a) = phi(work[a]) - f;
      wg.col(a) = g.col(work[a]);
    }
    QpSolution qp = solve_minimax_qp(wphi, wg, h);
    Vec d = qp.d;
    if (std::isfinite(ball.radius) && d.norm() > 2.0 * ball.radius) d *= 2.0 * ball.radius / d.norm();
    if (d.norm() <= 1e-14 * (1.0 + x.norm())) break;

    bool accepted = false;
    bool converged = false;
    double alpha = 1.0;
    Vec xn;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      xn = ball.project(x + alpha * d);
      Vec s = xn - x;
      if (s.norm() == 0.0) break;
      const double pred = f - (phi + g.transpose() * s).maxCoeff();
      const double fn = max_value(pieces, xn);
      const double tiny = 1e-12 * (1.0 + std::abs(f));
      // a projected step can leave the model's descent cone
      if (pred < -tiny) continue;
      // below model resolution: take a nonincreasing full step and stop
      if (pred <= tiny) {
        accepted = ls == 0 && fn <= f;
        converged = true;
        break;
      }
      if (fn <= f - 1e-4 * pred) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    Vec lam = Vec::Zero(m);
    for (int a = 0; a < w; ++a) lam(work[a]) = qp.lambda(a);
    lam_prev = lam;
    const double step = (xn - x).norm();
    x = xn;
    if (converged || step <= 1e-15 * (1.0 + x.norm())) break;
  }
  res.iterations = it;
  res.budget_exceeded = it >= cfg.max_iters;
  res.x = x;
  res.value = max_value(pieces, x);
  return res;
}

std::vector<Vec> start_lattice(const Ball& ball, const SolverConfig& cfg) {
  const int n = static_cast<int>(ball.center.size());
  const double r = std::isfinite(ball.radius) ? ball.radius : 1.0;
  const double s = cfg.start_scale * r / std::sqrt(static_cast<double>(std::max(n, 1)));
  std::vector<Vec> out;
  for (const Vec& p : ternary_lattice(n)) out.push_back(ball.center + s * p);
  return out;
}

MultistartResult multistart_minimize(const MinMaxForm& form, const Ball& ball,
                                     const SolverConfig& cfg,
                                     const std::vector<Vec>& extra_starts) {
  std::vector<Vec> starts = extra_starts;
  for (Vec& s : start_lattice(ball, cfg)) starts.push_back(std::move(s));

  struct Candidate {
    Vec x;
    double value;
  };
  std::vector<Candidate> cands;
  MultistartResult out;
  out.starts = static_cast<int>(starts.size());
  for (const Vec& s : starts) {
    for (const auto& branch : form) {
      LocalResult r = minimize_max(branch, s, ball, cfg);
      out.budget_exceeded = out.budget_exceeded || r.budget_exceeded;
      cands.push_back({r.x, evaluate(form, r.x)});
    }
  }
  double best = kInf;
  for (const auto& c : cands) best = std::min(best, c.value);
  out.value = best;
  const double ctol = cfg.cluster_rel * (1.0 + std::abs(best));
  const double sep = cfg.sep_rel * (std::isfinite(ball.radius) ? ball.radius : 1.0);
  for (const auto& c : cands) {
    if (c.value > best + ctol) continue;
    bool distinct = true;
    for (const Vec& m : out.minimizers) {
      if ((m - c.x).norm() < sep) {
        distinct = false;
        break;
      }
    }
    if (distinct) out.minimizers.push_back(c.x);
  }
  for (const Vec& m : out.minimizers) out.boundary_active = out.boundary_active || ball.on_boundary(m);
  return out;
}

}  // namespace vulab
