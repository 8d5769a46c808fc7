#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vulab/errors.hpp"
#include "vulab/oracle.hpp"
#include "vulab/ulag.hpp"
#include "vulab/vu.hpp"

using namespace vulab;

namespace {
ULagContext context_for(const std::string& name, double eps_v = -1.0) {
  const auto m = builtin(name);
  const auto poly = subdifferential_polytope(m, m.base_point);
  VUFrame f = decompose(poly, lagrangian_anchor(poly), 1e-8, m.default_radius);
  f.x_bar = m.base_point;
  return make_context(m, f, eps_v);
}
Vec u1(double u) { return Vec::Constant(1, u); }
}  // namespace

TEST_CASE("crossing_max selection matches the golden-section oracle") {
  const ULagContext ctx = context_for("crossing_max");
  const double ybar = oracle::crossing_ybar();
  for (double u : {-0.15, -0.05, 0.0, 0.02, 0.1, 0.15}) {
    const VSelection s = v_of_u(ctx, u1(u));
    // v minimizes the crossing function along the vertical line x = u
    const double y = oracle::scan_then_golden([&](double y) { return oracle::crossing_f(u, y); }, ybar - 0.2, ybar + 0.2);
    CHECK(std::abs(s.v(0) - (y - ybar)) <= 1e-6);
    CHECK(s.v(0) == doctest::Approx(oracle::crossing_v(u)).epsilon(1e-7));
    CHECK_FALSE(s.boundary_active);
    CHECK(L_eps(ctx, u1(u)) == doctest::Approx(ybar + oracle::crossing_v(u)).epsilon(1e-9));
  }
}

TEST_CASE("crossing_max gradient of L is v'") {
  const ULagContext ctx = context_for("crossing_max");
  for (double u : {-0.1, 0.0, 0.05, 0.12}) {
    const GradientEstimate g = grad_L(ctx, u1(u));
    CHECK(g.z_u(0) == doctest::Approx(oracle::crossing_dv(u)).epsilon(1e-6));
    CHECK(g.hull_distance <= 1e-5);
  }
}

TEST_CASE("abs_plus_quad Lagrangian is u²") {
  // U = span{(1,1)/√2}; x = u(1,1)/√2 gives ‖x‖² = u²
  const ULagContext ctx = context_for("abs_plus_quad");
  for (double u : {-0.6, -0.1, 0.0, 0.4}) {
    CHECK(L_eps(ctx, u1(u)) == doctest::Approx(u * u).epsilon(1e-10));
    CHECK(v_of_u(ctx, u1(u)).v.norm() <= 1e-7);
    CHECK(grad_L(ctx, u1(u)).z_u(0) == doctest::Approx(2 * u).epsilon(1e-6));
  }
}

TEST_CASE("k_v equals L for the zero anchor") {
  const ULagContext ctx = context_for("abs_plus_quad");
  CHECK(k_v(ctx, u1(0.3)) == doctest::Approx(L_eps(ctx, u1(0.3))));
}

TEST_CASE("convexity on full grids") {
  for (const char* name : {"crossing_max", "abs_plus_quad", "abs_diff"}) {
    const ULagContext ctx = context_for(name);
    const ConvexityReport r = convexity_check(ctx, u_lattice(ctx.dim_u(), 0.9 * ctx.eps, 21));
    CHECK(r.pairs > 0);
    CHECK(r.worst <= 1e-9 * r.scale);
  }
}

TEST_CASE("little-oh ratios shrink on crossing_max") {
  const ULagContext ctx = context_for("crossing_max");
  const auto ratios = little_oh_check(ctx, {0.1, 0.01, 1e-3});
  REQUIRE(ratios.size() == 3);
  // ‖v(u)‖/‖u‖ ≈ |u|/√5
  CHECK(ratios[0] == doctest::Approx(0.1 / std::sqrt(5.0)).epsilon(1e-2));
  CHECK(ratios[2] <= 1e-3);
  CHECK(ratios[2] < ratios[1]);
}

TEST_CASE("u lattice stays in the ball") {
  const auto l = u_lattice(2, 1.0, 5);
  CHECK(l.size() == 13);  // nodes of the 5×5 grid with norm ≤ 1
  for (const Vec& u : l) CHECK(u.norm() <= 1.0 + 1e-12);
  CHECK(u_lattice(1, 2.0, 5).size() == 5);
}

TEST_CASE("gradient outside the U-ball interior is rejected") {
  const ULagContext ctx = context_for("crossing_max");
  CHECK_THROWS_AS(grad_L(ctx, u1(ctx.eps)), PreconditionFailed);
}

TEST_CASE("lagrangian anchor") {
  const auto m = builtin("abs_diff");
  CHECK(lagrangian_anchor(subdifferential_polytope(m, Vec::Zero(2))).norm() == 0.0);
  Vec x(2);
  x << 1, 0;
  const Vec a = lagrangian_anchor(subdifferential_polytope(m, x));
  CHECK(a(0) == 1.0);
}
