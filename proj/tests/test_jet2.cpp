#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"
#include "vulab/jet2.hpp"
#include "vulab/oracle.hpp"

using namespace vulab;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Mat m2(double a, double c, double b) {
  Mat q(2, 2);
  q << a, c, c, b;
  return q;
}
Mat diag_col(double a, double b) {
  Mat m(2, 1);
  m << a, b;
  return m / m.norm();
}

/// f(u) = u⁴ + u²/2 as a one-piece structured model.
FunctionModel quartic() {
  SmoothPiece p;
  p.value = [](const Vec& x) { return std::pow(x(0), 4) + 0.5 * x(0) * x(0); };
  p.gradient = [](const Vec& x) { return Vec::Constant(1, 4 * std::pow(x(0), 3) + x(0)); };
  p.hessian = [](const Vec& x) { return Mat::Constant(1, 1, 12 * x(0) * x(0) + 1); };
  ModelFlags flags;
  flags.convex = true;
  flags.quadratic_minorant = QuadraticMinorant{0.0, 0.0};
  return make_max_of_smooth("quartic", 1, {p}, flags);
}
}  // namespace

TEST_CASE("geometric grid and delta2") {
  const auto g = geometric_grid(0.1, 0.5, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[2] == doctest::Approx(0.025));
  const auto q = builtin("quadratic(diag(2,5))");
  // Δ₂ of a quadratic is uᵀAu for every t
  for (double t : {1.0, 0.1, 1e-3}) CHECK(delta2(q, Vec::Zero(2), Vec::Zero(2), t, v2(0.6, 0.8)) == doctest::Approx(2 * 0.36 + 5 * 0.64));
}

TEST_CASE("dini second derivative of abs_diff") {
  const auto m = builtin("abs_diff");
  const Vec h = v2(1, 1) / std::sqrt(2.0);
  const ShellValue d = dini_second(m, Vec::Zero(2), Vec::Zero(2), h);
  CHECK_FALSE(d.divergent);
  CHECK(d.value == doctest::Approx(0.0));
  const ShellValue e = dini_second(m, Vec::Zero(2), Vec::Zero(2), v2(1, -1) / std::sqrt(2.0));
  CHECK(e.divergent);
}

TEST_CASE("dini second derivative of a quadratic") {
  const auto q = builtin("quadratic(diag(2,5))");
  const ShellValue d = dini_second(q, Vec::Zero(2), Vec::Zero(2), v2(1, 0));
  CHECK_FALSE(d.divergent);
  // minimum over a direction ball of radius 0.1·t shrinks to hᵀAh
  CHECK(d.value == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(d.value <= 2.0);
}

TEST_CASE("rank-one support classifies the abs_diff barrier cone") {
  const auto m = builtin("abs_diff");
  const auto dirs = unit_directions(2, 64);
  const Vec diag = v2(1, 1) / std::sqrt(2.0);
  for (const Vec& h : dirs) {
    const ShellValue s = rank1_support(m, Vec::Zero(2), Vec::Zero(2), h);
    const double angle = std::acos(std::min(1.0, std::abs(h.dot(diag))));
    CHECK(s.divergent == (angle > M_PI / 180));
  }
}

TEST_CASE("subjet membership on abs_diff follows the sign rule") {
  const auto m = builtin("abs_diff");
  for (const Mat& q : {m2(-1, 0, -1), m2(1, -1, 0.5), m2(0.4, 0, 0.4), m2(3, -2, 0.5), m2(-2, 1, -0.5)}) {
    const bool rule = oracle::abs_diff_member(q(0, 0), q(0, 1), q(1, 1));
    const MembershipResult r = subjet_membership(m, {Vec::Zero(2), Vec::Zero(2), q});
    CHECK(r.verdict == (rule ? Membership::Member : Membership::Rejected));
    if (!rule) CHECK(r.witness.has_value());
  }
}

TEST_CASE("subjet membership on a quadratic") {
  const auto q = builtin("quadratic(diag(2,5))");
  const Mat a = m2(2, 0, 5);
  CHECK(subjet_membership(q, {Vec::Zero(2), Vec::Zero(2), a}).verdict == Membership::Member);
  CHECK(subjet_membership(q, {Vec::Zero(2), Vec::Zero(2), a + Mat::Identity(2, 2)}).verdict ==
        Membership::Rejected);
  CHECK(subjet_membership(q, {Vec::Zero(2), v2(0.5, 0), a}).verdict == Membership::Rejected);
}

TEST_CASE("second-order component of abs_diff is the diagonal") {
  const auto m = builtin("abs_diff");
  Mat u = diag_col(1, 1);
  const SecondOrderComponent c = second_order_component(m, Vec::Zero(2), Vec::Zero(2), 64, {}, &u);
  REQUIRE(c.u2_basis.cols() == 1);
  CHECK(subspace_distance(c.u2_basis, u) <= 1e-6);
  CHECK(c.inside_u);
}

TEST_CASE("second-order component needs z̄ in the hull") {
  CHECK_THROWS_AS(second_order_component(builtin("abs_diff"), Vec::Zero(2), v2(2, 2)), PreconditionFailed);
}

TEST_CASE("second-order component of four_quadrant_max is trivial") {
  const SecondOrderComponent c = second_order_component(builtin("four_quadrant_max"), Vec::Zero(2), Vec::Zero(2));
  CHECK(c.u2_basis.cols() == 0);
}

TEST_CASE("limiting Hessians") {
  const auto q = builtin("quadratic(diag(1,10))");
  const HessianBundle b = limiting_hessians(q, Vec::Zero(2), Vec::Zero(2));
  REQUIRE(!b.samples.empty());
  CHECK(b.source == HessianSource::Analytic);
  for (const auto& s : b.samples) CHECK((s.hessian - m2(1, 0, 10)).norm() <= 1e-12);
  CHECK(tilt_criterion_c11(b) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(coderivative_support(b, v2(0, 1)) == doctest::Approx(10.0));
  const auto imgs = coderivative_c11(b, v2(1, 1));
  CHECK((imgs[0] - v2(1, 10)).norm() <= 1e-12);

  const auto cm = builtin("crossing_max");
  Vec zq(2);
  zq << 0, 1 - std::sqrt(5.0);  // gradient of the quadratic piece at the base point
  const HessianBundle c = limiting_hessians(cm, cm.base_point, zq);
  REQUIRE(!c.samples.empty());
  for (const auto& s : c.samples) CHECK((s.hessian - m2(2, 0, 2)).norm() <= 1e-9);

  CHECK_THROWS_AS(limiting_hessians(builtin("abs_diff"), Vec::Zero(2), Vec::Zero(2)), EmptyBundle);
}

TEST_CASE("Moreau envelope of |x| is Huber") {
  const auto abs1 = builtin("huber_source_abs");
  CHECK(moreau_envelope(abs1, 0.5, Vec::Constant(1, 0.2)).value == doctest::Approx(0.04).epsilon(1e-9));
  CHECK(moreau_envelope(abs1, 0.5, Vec::Constant(1, 2.0)).value == doctest::Approx(1.75).epsilon(1e-9));
  for (int i = 0; i < 41; ++i) {
    const double x = -2 + 0.1 * i;
    const MoreauValue mv = moreau_envelope(abs1, 0.5, Vec::Constant(1, x));
    CHECK(mv.value == doctest::Approx(oracle::huber(x, 0.5)).epsilon(1e-9));
    CHECK(mv.gradient(0) == doctest::Approx(std::clamp(x / 0.5, -1.0, 1.0)).epsilon(1e-7));
  }
  const auto q = builtin("quadratic(I2)");
  CHECK(moreau_envelope(q, 1.0, v2(1, 2)).value == doctest::Approx(5.0 / 4).epsilon(1e-9));
  CHECK_THROWS_AS(moreau_envelope(builtin("quadratic(-2*I2)"), 1.0, v2(0, 0)), LambdaTooLarge);
}

TEST_CASE("Moreau Hessians of |x| are 0 and 1/λ") {
  const FunctionModel fl = moreau_model(builtin("huber_source_abs"), 0.5);
  const HessianBundle b = limiting_hessians(fl, Vec::Constant(1, 0.5), Vec::Constant(1, 1.0));
  REQUIRE(!b.samples.empty());
  CHECK(b.source == HessianSource::Moreau);
  bool saw0 = false, saw2 = false;
  for (const auto& s : b.samples) {
    const double h = s.hessian(0, 0);
    saw0 = saw0 || std::abs(h) < 1e-3;
    saw2 = saw2 || std::abs(h - 2.0) < 1e-3;
    CHECK((std::abs(h) < 1e-3 || std::abs(h - 2.0) < 1e-3));
  }
  CHECK(saw0);
  CHECK(saw2);
}

TEST_CASE("para-convexity") {
  const auto prof = [](const FunctionModel& m) {
    return second_order_component(m, Vec::Zero(2), Vec::Zero(2), 32).profile;
  };
  CHECK(para_convexity_check(prof(builtin("abs_diff")), 0.0).violation <= 1e-9);
  CHECK(para_convexity_check(prof(builtin("quadratic(diag(2,5))")), 0.0).violation <= 1e-9);
  const RankOneProfile neg = prof(builtin("quadratic(-2*I2)"));
  CHECK(para_convexity_check(neg, 2.0).violation <= 1e-9);
  CHECK(para_convexity_check(neg, 0.0).violation > 1e-3);
}

TEST_CASE("Hessian duality") {
  CHECK(hessian_duality_check(builtin("quadratic(diag(2,5))"), Vec::Zero(2)).residual <= 1e-3);
  CHECK(hessian_duality_check(builtin("quadratic(I2)"), Vec::Zero(2)).residual <= 1e-6);
  const DualityReport d = hessian_duality_check(quartic(), Vec::Constant(1, 0.5));
  CHECK(d.q(0, 0) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(d.residual <= 1e-2);
  CHECK_THROWS_AS(hessian_duality_check(builtin("abs_diff"), Vec::Zero(2)), PreconditionFailed);
}

TEST_CASE("uniform bound on the abs_diff barrier cone is finite") {
  const double m = uniform_bound_check(builtin("abs_diff"), Vec::Zero(2), Vec::Zero(2), diag_col(1, 1));
  CHECK(std::isfinite(m));
  CHECK(m >= 0.0);
  CHECK_THROWS_AS(uniform_bound_check(builtin("abs_diff"), Vec::Zero(2), Vec::Zero(2), Mat(2, 0)),
                  PreconditionFailed);
}

TEST_CASE("profile CSV") {
  const auto c = second_order_component(builtin("abs_diff"), Vec::Zero(2), Vec::Zero(2), 8);
  const std::string csv = profile_to_csv(c.profile);
  CHECK(csv.rfind("h0,h1,classification,finest_value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
