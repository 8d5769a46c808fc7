#pragma once

#include <functional>
#include <vector>

#include "vulab/types.hpp"

namespace vulab {

/// A C² function given by value/gradient/Hessian oracles. The Hessian oracle
/// is optional; when absent `hessian_at` differentiates the gradient.
struct SmoothPiece {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;

  bool has_hessian() const { return static_cast<bool>(hessian); }
  Mat hessian_at(const Vec& x) const;
};

/// ½xᵀAx + bᵀx + c.
SmoothPiece quadratic_piece(Mat a, Vec b, double c);
/// ⟨a,x⟩ + b.
SmoothPiece affine_piece(Vec a, double b);
/// Σ pieces.
SmoothPiece sum_of(std::vector<SmoothPiece> pieces);
/// y ↦ p(offset + basis·y).
SmoothPiece restrict_affine(const SmoothPiece& p, Vec offset, Mat basis);
/// x ↦ p(x) + ⟨linear,x⟩ + (weight/2)‖x − center‖².
SmoothPiece add_terms(const SmoothPiece& p, Vec linear, double weight, Vec center);

/// f = min over branches of max over pieces in the branch. Every structured
/// model compiles to this form; a plain max of smooth functions is one branch.
using MinMaxForm = std::vector<std::vector<SmoothPiece>>;

MinMaxForm restrict_affine(const MinMaxForm& form, const Vec& offset, const Mat& basis);
MinMaxForm add_terms(const MinMaxForm& form, const Vec& linear, double weight,
                     const Vec& center);
double evaluate(const MinMaxForm& form, const Vec& x);
double evaluate_branch(const std::vector<SmoothPiece>& branch, const Vec& x);

/// Central-difference Hessian of a gradient oracle, symmetrized.
Mat fd_hessian_from_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x,
                             double step);
/// Central-difference gradient of a value oracle.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step);

}  // namespace vulab
