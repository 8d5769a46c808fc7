#pragma once

#include <vector>

#include "vulab/types.hpp"

namespace vulab {

/// Symmetric part (A + Aᵀ)/2.
Mat symmetrize(const Mat& a);

/// Flips each column so that its largest-magnitude entry (first one on ties)
/// is positive. Bases are only defined up to sign; this makes output stable.
void canonicalize_signs(Mat& basis);

/// Orthonormal basis of the orthogonal complement of span(basis) in ℝⁿ.
/// `basis` is assumed to have orthonormal columns.
Mat orthonormal_complement(const Mat& basis, int n);

/// Principal angles (radians, ascending) between span(a) and span(b).
/// Both arguments need orthonormal columns.
Vec principal_angles(const Mat& a, const Mat& b);

/// Largest principal angle; π/2 when the dimensions differ, 0 when both
/// subspaces are trivial.
double subspace_distance(const Mat& a, const Mat& b);

/// Angle between a nonzero vector and a subspace (π/2 for the zero subspace).
double angle_to_subspace(const Vec& h, const Mat& basis);

/// Deterministic set of unit vectors in ℝᵏ. k=1 gives {+1,−1}; k=2 gives
/// `count` equally spaced angles starting at 0; k≥3 gives the coordinate axes,
/// their pairwise diagonals and a Fibonacci sphere filling up to `count`.
std::vector<Vec> unit_directions(int k, int count);

/// Maps unit directions of ℝᵏ into span(basis) (n×k).
std::vector<Vec> directions_in(const Mat& basis, int count);

/// Points of the cube lattice {−1,0,1}ⁿ (3ⁿ points, lexicographic order).
std::vector<Vec> ternary_lattice(int n);

/// Result of a nearest-point query on a convex hull of finitely many points.
struct HullProjection {
  Vec point;
  Vec weights;  // convex weights, one per generator
  double distance = 0.0;
};

/// Euclidean projection of `p` onto co{generators} (Wolfe's min-norm point
/// method on the translated points).
HullProjection project_onto_hull(const std::vector<Vec>& generators, const Vec& p);

/// Eigen-decomposition based replacement of eigenvalues μ by max(|μ|, floor).
Mat positive_definite_modification(const Mat& h, double floor);

}  // namespace vulab
