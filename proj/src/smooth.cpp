#include "vulab/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "vulab/linalg.hpp"

namespace vulab {

Mat SmoothPiece::hessian_at(const Vec& x) const {
  if (hessian) return hessian(x);
  return fd_hessian_from_gradient(gradient, x, 1e-4 * (1.0 + x.norm()));
}

SmoothPiece quadratic_piece(Mat a, Vec b, double c) {
  a = symmetrize(a);
  SmoothPiece p;
  p.value = [a, b, c](const Vec& x) { return 0.5 * x.dot(a * x) + b.dot(x) + c; };
  p.gradient = [a, b](const Vec& x) -> Vec { return a * x + b; };
  p.hessian = [a](const Vec&) -> Mat { return a; };
  return p;
}

SmoothPiece affine_piece(Vec a, double b) {
  SmoothPiece p;
  const auto n = a.size();
  p.value = [a, b](const Vec& x) { return a.dot(x) + b; };
  p.gradient = [a](const Vec&) -> Vec { return a; };
  p.hessian = [n](const Vec&) -> Mat { return Mat::Zero(n, n); };
  return p;
}

SmoothPiece sum_of(std::vector<SmoothPiece> pieces) {
  const bool all_hess =
      std::all_of(pieces.begin(), pieces.end(), [](const SmoothPiece& p) { return p.has_hessian(); });
  auto shared = std::make_shared<const std::vector<SmoothPiece>>(std::move(pieces));
  SmoothPiece out;
  out.value = [shared](const Vec& x) {
    double s = 0.0;
    for (const auto& p : *shared) s += p.value(x);
    return s;
  };
  out.gradient = [shared](const Vec& x) -> Vec {
    Vec g = Vec::Zero(x.size());
    for (const auto& p : *shared) g += p.gradient(x);
    return g;
  };
  if (all_hess) {
    out.hessian = [shared](const Vec& x) -> Mat {
      Mat h = Mat::Zero(x.size(), x.size());
      for (const auto& p : *shared) h += p.hessian(x);
      return h;
    };
  }
  return out;
}

SmoothPiece restrict_affine(const SmoothPiece& p, Vec offset, Mat basis) {
  SmoothPiece out;
  out.value = [p, offset, basis](const Vec& y) { return p.value(offset + basis * y); };
  out.gradient = [p, offset, basis](const Vec& y) -> Vec {
    return basis.transpose() * p.gradient(offset + basis * y);
  };
  out.hessian = [p, offset, basis](const Vec& y) -> Mat {
    return basis.transpose() * p.hessian_at(offset + basis * y) * basis;
  };
  return out;
}

SmoothPiece add_terms(const SmoothPiece& p, Vec linear, double weight, Vec center) {
  SmoothPiece out;
  out.value = [p, linear, weight, center](const Vec& x) {
    return p.value(x) + linear.dot(x) + 0.5 * weight * (x - center).squaredNorm();
  };
  out.gradient = [p, linear, weight, center](const Vec& x) -> Vec {
    return p.gradient(x) + linear + weight * (x - center);
  };
  if (p.has_hessian()) {
    out.hessian = [p, weight](const Vec& x) -> Mat {
      return p.hessian(x) + weight * Mat::Identity(x.size(), x.size());
    };
  } else {
    out.hessian = [p, weight](const Vec& x) -> Mat {
      return p.hessian_at(x) + weight * Mat::Identity(x.size(), x.size());
    };
  }
  return out;
}

MinMaxForm restrict_affine(const MinMaxForm& form, const Vec& offset, const Mat& basis) {
  MinMaxForm out;
  for (const auto& branch : form) {
    auto& nb = out.emplace_back();
    for (const auto& p : branch) nb.push_back(restrict_affine(p, offset, basis));
  }
  return out;
}

MinMaxForm add_terms(const MinMaxForm& form, const Vec& linear, double weight,
                     const Vec& center) {
  MinMaxForm out;
  for (const auto& branch : form) {
    auto& nb = out.emplace_back();
    for (const auto& p : branch) nb.push_back(add_terms(p, linear, weight, center));
  }
  return out;
}

double evaluate_branch(const std::vector<SmoothPiece>& branch, const Vec& x) {
  double v = -kInf;
  for (const auto& p : branch) v = std::max(v, p.value(x));
  return v;
}

double evaluate(const MinMaxForm& form, const Vec& x) {
  double v = kInf;
  for (const auto& b : form) v = std::min(v, evaluate_branch(b, x));
  return v;
}

Mat fd_hessian_from_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x,
                             double step) {
  const auto n = x.size();
  Mat h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    h.col(j) = (grad(xp) - grad(xm)) / (2.0 * step);
  }
  return symmetrize(h);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    g(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace vulab
