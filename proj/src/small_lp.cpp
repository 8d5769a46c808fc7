#include "vulab/small_lp.hpp"

#include <algorithm>
#include <cmath>

#include "vulab/errors.hpp"

namespace vulab {

namespace {

enum class Status { Optimal, Unbounded, Infeasible, Singular };

class Simplex {
 public:
  Simplex(const Mat& a, const Vec& b) : a_(a), b_(b), m_(static_cast<int>(a.rows())), n_(static_cast<int>(a.cols())) {
    sign_ = Vec::Ones(m_);
    for (int i = 0; i < m_; ++i)
      if (b_(i) < 0.0) sign_(i) = -1.0;
  }

  Vec column(int j) const {
    if (j < n_) return a_.col(j);
    Vec e = Vec::Zero(m_);
    e(j - n_) = sign_(j - n_);
    return e;
  }

  bool refactor() {
    Mat bm(m_, m_);
    for (int i = 0; i < m_; ++i) bm.col(i) = column(basis[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(bm);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible()) return false;
    binv_ = lu.inverse();
    return true;
  }

  Vec basic_values() const { return binv_ * b_; }

  bool is_basic(int j) const { return std::find(basis.begin(), basis.end(), j) != basis.end(); }

  // Reduced costs of the real columns; basic ones are set to zero.
  Vec reduced_costs(const Vec& cost) const {
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
    const Vec y = binv_.transpose() * cb;
    Vec r = cost.head(n_) - a_.transpose() * y;
    for (int j : basis)
      if (j < n_) r(j) = 0.0;
    return r;
  }

  Status primal(const Vec& cost, int& pivots) {
    bool bland = false;
    int stall = 0;
    const int limit = 50 * (n_ + m_) + 1000;
    for (int it = 0; it < limit; ++it) {
      if (!refactor()) return Status::Singular;
      const Vec xb = basic_values();
      const Vec r = reduced_costs(cost);
      const double scale = 1.0 + cost.head(n_).cwiseAbs().maxCoeff();
      const double tol = 1e-11 * scale;
      int q = -1;
      double best = -tol;
      for (int j = 0; j < n_; ++j) {
        if (r(j) < best) {
          q = j;
          if (bland) break;
          best = r(j);
        }
      }
      if (q < 0) return Status::Optimal;
      const Vec w = binv_ * column(q);
      int leave = -1;
      double ratio = kInf;
      for (int i = 0; i < m_; ++i) {
        if (w(i) > 1e-12) {
          const double t = std::max(0.0, xb(i)) / w(i);
          const bool tie = leave >= 0 && std::abs(t - ratio) <= 1e-14;
          if (leave < 0 || t < ratio - 1e-14 ||
              (tie && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            ratio = std::min(ratio, t);
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::Unbounded;
      if (ratio <= 1e-14) {
        if (++stall > 20) bland = true;
      } else {
        stall = 0;
      }
      basis[static_cast<std::size_t>(leave)] = q;
      ++pivots;
    }
    return Status::Optimal;
  }

  Status dual(const Vec& cost, int& pivots) {
    const int limit = 50 * (n_ + m_) + 1000;
    for (int it = 0; it < limit; ++it) {
      if (!refactor()) return Status::Singular;
      const Vec xb = basic_values();
      Eigen::Index r = 0;
      const double most = xb.minCoeff(&r);
      if (most >= -1e-12 * (1.0 + b_.cwiseAbs().maxCoeff())) return Status::Optimal;
      const Vec rc = reduced_costs(cost).cwiseMax(0.0);
      const Vec alpha = a_.transpose() * binv_.row(r).transpose();
      int q = -1;
      double best = kInf;
      for (int j = 0; j < n_; ++j) {
        if (alpha(j) < -1e-12 && !is_basic(j)) {
          const double t = rc(j) / -alpha(j);
          if (t < best) {
            best = t;
            q = j;
          }
        }
      }
      if (q < 0) return Status::Infeasible;
      basis[static_cast<std::size_t>(r)] = q;
      ++pivots;
    }
    return Status::Optimal;
  }

  // Pivots zero-level artificials out of the basis where a real column allows it.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis[static_cast<std::size_t>(i)] < n_) continue;
      if (!refactor()) return;
      const Vec row = a_.transpose() * binv_.row(i).transpose();
      for (int j = 0; j < n_; ++j) {
        if (std::abs(row(j)) > 1e-9 && !is_basic(j)) {
          basis[static_cast<std::size_t>(i)] = j;
          break;
        }
      }
    }
  }

  int m() const { return m_; }
  int n() const { return n_; }

  std::vector<int> basis;

 private:
  const Mat& a_;
  Vec b_;
  int m_;
  int n_;
  Vec sign_;
  Mat binv_;
};

LpResult finish(Simplex& s, const Vec& c, int pivots) {
  LpResult out;
  s.refactor();
  out.basic_values = s.basic_values();
  out.feasible = true;
  out.value = 0.0;
  for (int i = 0; i < s.m(); ++i) {
    const int j = s.basis[static_cast<std::size_t>(i)];
    if (j < s.n()) {
      out.value += c(j) * std::max(0.0, out.basic_values(i));
      out.basis.push_back(j);
    } else {
      out.basis.push_back(-1);
    }
  }
  out.pivots = pivots;
  return out;
}

}  // namespace

LpResult solve_lp(const Mat& a, const Vec& b, const Vec& c, const std::vector<int>* warm_basis) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Simplex s(a, b);
  Vec cost2 = Vec::Zero(n + m);
  cost2.head(n) = c;
  int pivots = 0;

  if (warm_basis && static_cast<int>(warm_basis->size()) == m &&
      std::all_of(warm_basis->begin(), warm_basis->end(), [n](int j) { return j >= 0 && j < n; })) {
    s.basis = *warm_basis;
    if (s.refactor()) {
      Status st = s.dual(cost2, pivots);
      if (st == Status::Infeasible) return LpResult{};
      if (st == Status::Optimal) {
        st = s.primal(cost2, pivots);
        if (st == Status::Unbounded) throw SolverBudgetExceeded("linear program is unbounded");
        if (st == Status::Optimal) return finish(s, c, pivots);
      }
    }
  }

  s.basis.clear();
  for (int i = 0; i < m; ++i) s.basis.push_back(n + i);
  Vec cost1 = Vec::Zero(n + m);
  cost1.tail(m).setOnes();
  if (s.primal(cost1, pivots) == Status::Singular) return LpResult{};
  s.refactor();
  const Vec xb = s.basic_values();
  double infeas = 0.0;
  for (int i = 0; i < m; ++i)
    if (s.basis[static_cast<std::size_t>(i)] >= n) infeas += std::abs(xb(i));
  if (infeas > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) return LpResult{};
  s.drive_out_artificials();
  const Status st = s.primal(cost2, pivots);
  if (st == Status::Unbounded) throw SolverBudgetExceeded("linear program is unbounded");
  if (st == Status::Singular) return LpResult{};
  return finish(s, c, pivots);
}

}  // namespace vulab
