#include "vulab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vulab {

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

void canonicalize_signs(Mat& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      // ties within rounding go to the first index
      if (std::abs(basis(i, j)) > mag + 1e-12) {
        mag = std::abs(basis(i, j));
        best = i;
      }
    }
    if (basis.rows() > 0 && basis(best, j) < 0.0) basis.col(j) *= -1.0;
  }
}

Mat orthonormal_complement(const Mat& basis, int n) {
  if (basis.cols() == 0) return Mat::Identity(n, n);
  if (basis.cols() >= n) return Mat(n, 0);
  // Left singular vectors beyond the rank span the complement.
  Eigen::JacobiSVD<Mat> svd(basis, Eigen::ComputeFullU);
  const Eigen::Index k = basis.cols();
  Mat comp = svd.matrixU().rightCols(n - k);
  canonicalize_signs(comp);
  return comp;
}

Vec principal_angles(const Mat& a, const Mat& b) {
  if (a.cols() == 0 || b.cols() == 0) return Vec(0);
  Mat m = a.transpose() * b;
  Eigen::JacobiSVD<Mat> svd(m);
  Vec s = svd.singularValues();
  Vec angles(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    // acos is ill-conditioned near 1, so use the sine from the residual norm.
    const double c = std::clamp(s(i), 0.0, 1.0);
    angles(i) = std::atan2(std::sqrt(std::max(0.0, (1.0 - c) * (1.0 + c))), c);
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

double subspace_distance(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) return std::numbers::pi / 2.0;
  if (a.cols() == 0) return 0.0;
  // sin of the largest principal angle = ‖(I − P_a) b‖₂ (stable for tiny angles)
  Mat resid = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Mat> svd(resid);
  const double s = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  return std::asin(s);
}

double angle_to_subspace(const Vec& h, const Mat& basis) {
  const double nh = h.norm();
  if (nh == 0.0) return 0.0;
  if (basis.cols() == 0) return std::numbers::pi / 2.0;
  Vec proj = basis * (basis.transpose() * h);
  const double along = proj.norm();
  const double across = (h - proj).norm();
  return std::atan2(across, along);
}

std::vector<Vec> unit_directions(int k, int count) {
  std::vector<Vec> out;
  if (k <= 0) return out;
  if (k == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  if (k == 2) {
    const int m = std::max(count, 4);
    for (int i = 0; i < m; ++i) {
      const double a = 2.0 * std::numbers::pi * i / m;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      // exact zeros on the axes keep symmetric probes symmetric
      for (int j = 0; j < 2; ++j)
        if (std::abs(v(j)) < 1e-15) v(j) = 0.0;
      out.push_back(v);
    }
    return out;
  }
  for (int i = 0; i < k; ++i) {
    for (double s : {1.0, -1.0}) {
      Vec v = Vec::Zero(k);
      v(i) = s;
      out.push_back(v);
    }
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Vec v = Vec::Zero(k);
          v(i) = si;
          v(j) = sj;
          out.push_back(v.normalized());
        }
      }
    }
  }
  const int extra = count - static_cast<int>(out.size());
  if (extra > 0 && k == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < extra; ++i) {
      const double y = 1.0 - 2.0 * (i + 0.5) / extra;
      const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
      const double phi = golden * i;
      Vec v(3);
      v << r * std::cos(phi), y, r * std::sin(phi);
      out.push_back(v);
    }
  }
  return out;
}

std::vector<Vec> directions_in(const Mat& basis, int count) {
  std::vector<Vec> out;
  for (const Vec& d : unit_directions(static_cast<int>(basis.cols()), count))
    out.push_back(basis * d);
  return out;
}

std::vector<Vec> ternary_lattice(int n) {
  std::vector<Vec> out;
  if (n == 0) {
    out.emplace_back(0);
    return out;
  }
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (int idx = 0; idx < total; ++idx) {
    Vec v(n);
    int rem = idx;
    for (int i = n - 1; i >= 0; --i) {
      v(i) = static_cast<double>(rem % 3) - 1.0;
      rem /= 3;
    }
    out.push_back(v);
  }
  return out;
}

namespace {

// Minimum-norm point of the affine hull of the columns of `pts`.
// Returns the affine weights (sum to one).
Vec affine_min_norm(const Mat& pts) {
  const Eigen::Index k = pts.cols();
  Mat kkt = Mat::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = pts.transpose() * pts;
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Vec rhs = Vec::Zero(k + 1);
  rhs(k) = 1.0;
  Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return sol.head(k);
}

}  // namespace

HullProjection project_onto_hull(const std::vector<Vec>& generators, const Vec& p) {
  const int m = static_cast<int>(generators.size());
  const Eigen::Index n = p.size();
  Mat pts(n, m);
  double scale = 0.0;
  for (int i = 0; i < m; ++i) {
    pts.col(i) = generators[i] - p;
    scale = std::max(scale, pts.col(i).squaredNorm());
  }
  HullProjection out;
  out.weights = Vec::Zero(m);
  if (m == 0) return out;

  std::vector<int> support;
  Vec lambda;  // weights over support
  {
    int best = 0;
    for (int i = 1; i < m; ++i)
      if (pts.col(i).squaredNorm() < pts.col(best).squaredNorm()) best = i;
    support = {best};
    lambda = Vec::Ones(1);
  }
  Vec x = pts.col(support[0]);
  const double tol = 1e-15 * std::max(scale, 1e-300);

  for (int major = 0; major < 10 * m + 50; ++major) {
    int j = 0;
    double best_dot = x.dot(pts.col(0));
    for (int i = 1; i < m; ++i) {
      const double d = x.dot(pts.col(i));
      if (d < best_dot) {
        best_dot = d;
        j = i;
      }
    }
    if (x.squaredNorm() - best_dot <= tol * 10.0 + 1e-14 * x.squaredNorm()) break;
    if (std::find(support.begin(), support.end(), j) != support.end()) break;
    support.push_back(j);
    Vec grown(lambda.size() + 1);
    grown << lambda, 0.0;
    lambda = grown;

    for (int minor = 0; minor < m + 5; ++minor) {
      Mat sp(n, static_cast<Eigen::Index>(support.size()));
      for (std::size_t s = 0; s < support.size(); ++s) sp.col(s) = pts.col(support[s]);
      Vec alpha = affine_min_norm(sp);
      if ((alpha.array() > 1e-14).all()) {
        lambda = alpha;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index s = 0; s < alpha.size(); ++s) {
        if (alpha(s) <= 1e-14) {
          const double denom = lambda(s) - alpha(s);
          if (denom > 0.0) theta = std::min(theta, lambda(s) / denom);
        }
      }
      lambda = lambda + theta * (alpha - lambda);
      std::vector<int> kept;
      std::vector<double> kept_w;
      for (Eigen::Index s = 0; s < lambda.size(); ++s) {
        if (lambda(s) > 1e-14) {
          kept.push_back(support[s]);
          kept_w.push_back(lambda(s));
        }
      }
      if (kept.empty()) {  // numerical corner: keep the largest weight
        Eigen::Index arg = 0;
        lambda.maxCoeff(&arg);
        kept = {support[arg]};
        kept_w = {1.0};
      }
      support = kept;
      lambda = Eigen::Map<Vec>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
      lambda /= lambda.sum();
    }
    x.setZero();
    for (std::size_t s = 0; s < support.size(); ++s) x += lambda(s) * pts.col(support[s]);
  }

  for (std::size_t s = 0; s < support.size(); ++s) out.weights(support[s]) = lambda(s);
  out.point = x + p;
  out.distance = x.norm();
  return out;
}

Mat positive_definite_modification(const Mat& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(h));
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(std::abs(ev(i)), floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace vulab
