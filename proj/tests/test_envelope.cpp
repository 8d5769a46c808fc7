#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vulab/envelope.hpp"
#include "vulab/errors.hpp"
#include "vulab/oracle.hpp"
#include "vulab/ulag.hpp"
#include "vulab/vu.hpp"

using namespace vulab;

namespace {
GridFunction grid1(const std::function<double(double)>& f, double a, double b, int n) {
  return sample_grid([&](const Vec& x) { return f(x(0)); }, Vec::Constant(1, a), Vec::Constant(1, b), {n});
}
}  // namespace

TEST_CASE("double-well envelope matches brute-force pair search") {
  const auto f = [](double x) { return (x * x - 1) * (x * x - 1) + 0.3 * x; };
  const GridFunction g = grid1(f, -2, 2, 81);
  const GridFunction e = convex_envelope(g);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < g.size(); ++i) {
    xs.push_back(g.node(i)(0));
    ys.push_back(g.values[i]);
  }
  const auto ref = oracle::envelope_1d(xs, ys);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(e.values[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  // a point between nodes
  const double mid = envelope_at(g, Vec::Constant(1, 0.01));
  CHECK(mid <= f(0.01));
  CHECK(mid == doctest::Approx(0.8 * ref[40] + 0.2 * ref[41]).epsilon(1e-9));
}

TEST_CASE("envelope of a convex function is itself") {
  const GridFunction g = sample_grid([](const Vec& x) { return x.squaredNorm(); }, Vec::Constant(2, -1),
                                     Vec::Constant(2, 1), {9, 9});
  const GridFunction e = convex_envelope(g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(e.values[i] == doctest::Approx(g.values[i]).epsilon(1e-10));
}

TEST_CASE("discrete conjugate matches direct maximization") {
  const auto f = [](double x) { return std::abs(x) + 0.5 * x * x; };
  const GridFunction g = grid1(f, -3, 3, 601);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < g.size(); ++i) {
    xs.push_back(g.node(i)(0));
    ys.push_back(g.values[i]);
  }
  for (double z : {-2.0, -0.5, 0.0, 0.3, 1.5}) {
    CHECK(conjugate_at(g, Vec::Constant(1, z)).value == doctest::Approx(oracle::conjugate_1d(xs, ys, z)));
    // closed form (|z|-1)_+² / 2; the quadratic refinement only helps where f is smooth at the maximizer
    const double exact = std::pow(std::max(0.0, std::abs(z) - 1), 2) / 2;
    if (std::abs(z) > 1) CHECK(conjugate_refined_at(g, Vec::Constant(1, z)) == doctest::Approx(exact).epsilon(1e-6));
  }
  CHECK(conjugate_at(g, Vec::Constant(1, 10.0)).boundary);
}

TEST_CASE("legendre of a quadratic is the dual quadratic") {
  const GridFunction g = grid1([](double x) { return 2 * x * x; }, -2, 2, 401);
  const GridFunction d = legendre(g, Vec::Constant(1, -1), Vec::Constant(1, 1), {21});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double z = d.node(i)(0);
    CHECK(d.values[i] == doctest::Approx(z * z / 8).epsilon(1e-4));
  }
}

TEST_CASE("CSV round trip") {
  const GridFunction g = sample_grid([](const Vec& x) { return x(0) < 0 ? kInf : x(0) * x(1); },
                                     Vec::Constant(2, -1), Vec::Constant(2, 1), {3, 4});
  const GridFunction h = from_csv(to_csv(g));
  CHECK(h.resolution == g.resolution);
  CHECK((h.lower - g.lower).norm() == 0.0);
  CHECK((h.upper - g.upper).norm() == 0.0);
  REQUIRE(h.values.size() == g.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(h.values[i] == g.values[i]);
  CHECK_THROWS_AS(from_csv("garbage"), ParseError);
}

TEST_CASE("envelope refuses dimension 4") {
  const GridFunction g = sample_grid([](const Vec& x) { return x.norm(); }, Vec::Constant(4, -1),
                                     Vec::Constant(4, 1), {2, 2, 2, 2});
  CHECK_THROWS_AS(convex_envelope(g), DimensionTooLarge);
}

TEST_CASE("cell oscillation") {
  const GridFunction g = grid1([](double x) { return x; }, 0, 1, 11);
  CHECK(cell_oscillation(g, Vec::Constant(1, 0.55)) == doctest::Approx(0.1));
}

TEST_CASE("envelope agreement on abs_plus_quad along the U axis") {
  const auto m = builtin("abs_plus_quad");
  const auto poly = subdifferential_polytope(m, Vec::Zero(2));
  VUFrame f = decompose(poly, Vec::Zero(2));
  f.x_bar = Vec::Zero(2);
  std::vector<Vec> pts;
  for (double u : {-0.5, -0.2, 0.0, 0.3, 0.6}) pts.push_back(Vec::Zero(2) + u * Vec::Unit(2, 0));
  const AgreementReport r = envelope_agreement_check(m, f, 1.0, pts, 41);
  CHECK(r.within_bound);
  CHECK(r.max_residual <= 1e-9);
}
