#include <doctest.h>

#include <cmath>

#include "vulab/linalg.hpp"
#include "vulab/small_lp.hpp"

using namespace vulab;

TEST_CASE("principal angles and subspace distance") {
  Mat a(3, 1), b(3, 1);
  a << 1, 0, 0;
  b << std::cos(0.3), std::sin(0.3), 0;
  CHECK(subspace_distance(a, b) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(subspace_distance(a, a) == doctest::Approx(0.0));
  CHECK(subspace_distance(Mat(3, 0), Mat(3, 0)) == 0.0);
  CHECK(subspace_distance(a, Mat(3, 0)) == doctest::Approx(M_PI / 2));
}

TEST_CASE("orthonormal complement") {
  Mat u(3, 1);
  u << 1, 1, 0;
  u /= std::sqrt(2.0);
  const Mat c = orthonormal_complement(u, 3);
  CHECK(c.cols() == 2);
  CHECK((u.transpose() * c).norm() < 1e-12);
  CHECK((c.transpose() * c - Mat::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("unit directions") {
  const auto d1 = unit_directions(1, 64);
  REQUIRE(d1.size() == 2);
  CHECK(d1[0](0) == 1.0);
  CHECK(d1[1](0) == -1.0);
  const auto d2 = unit_directions(2, 64);
  CHECK(d2.size() == 64);
  for (const Vec& d : d2) CHECK(d.norm() == doctest::Approx(1.0));
  // antipodes are present for even counts
  CHECK((d2[0] + d2[32]).norm() < 1e-12);
}

TEST_CASE("hull projection against a brute-force segment search") {
  Vec a(2), b(2), p(2);
  a << 0, -1;
  b << 2, 1;
  p << 2, -1;
  const HullProjection h = project_onto_hull({a, b}, p);
  double best = 1e300;
  for (int i = 0; i <= 100000; ++i) {
    const double t = i / 100000.0;
    best = std::min(best, ((1 - t) * a + t * b - p).norm());
  }
  CHECK(h.distance == doctest::Approx(best).epsilon(1e-6));
  CHECK(h.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("positive definite modification") {
  Mat h(2, 2);
  h << 1, 0, 0, -3;
  const Mat m = positive_definite_modification(h, 1e-8);
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(3.0));
}

TEST_CASE("small LP matches vertex enumeration") {
  // min cᵀλ, Aλ = b, λ ≥ 0 with 2 rows: optimal vertices use at most 2 columns
  Mat a(2, 5);
  a << 1, 1, 1, 1, 1, 0.0, 0.3, 0.5, 0.8, 1.0;
  Vec c(5);
  c << 1.0, 0.2, 0.4, 0.1, 0.9;
  for (double x : {0.0, 0.25, 0.5, 0.65, 1.0}) {
    Vec b(2);
    b << 1.0, x;
    double best = 1e300;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double xi = a(1, i), xj = a(1, j);
        if (i == j) {
          if (std::abs(xi - x) < 1e-12) best = std::min(best, c(i));
          continue;
        }
        const double t = (x - xi) / (xj - xi);
        if (t >= -1e-12 && t <= 1 + 1e-12) best = std::min(best, (1 - t) * c(i) + t * c(j));
      }
    const LpResult r = solve_lp(a, b, c);
    REQUIRE(r.feasible);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-10));
    // warm start from this basis at a shifted right-hand side
    Vec b2(2);
    b2 << 1.0, std::min(1.0, x + 0.1);
    const LpResult cold = solve_lp(a, b2, c);
    const LpResult warm = solve_lp(a, b2, c, &r.basis);
    CHECK(warm.value == doctest::Approx(cold.value).epsilon(1e-10));
  }
}

TEST_CASE("small LP infeasible") {
  Mat a(2, 2);
  a << 1, 1, 0, 0;
  Vec b(2), c(2);
  b << 1, 1;
  c << 1, 1;
  CHECK_FALSE(solve_lp(a, b, c).feasible);
}
