#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"
#include "vulab/oracle.hpp"
#include "vulab/smooth.hpp"

using namespace vulab;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("builtin evaluation") {
  const auto ad = builtin("abs_diff");
  CHECK(ad.eval(v2(1, 0)) == 1.0);
  CHECK(ad.eval(v2(0.3, 0.3)) == 0.0);
  CHECK(builtin("crossing_max").eval(v2(0, 0)) == 1.0);
  CHECK(builtin("abs_plus_quad").eval(v2(1, 1)) == 2.0);
  CHECK(builtin("quadratic(I₂)").eval(v2(3, 4)) == doctest::Approx(12.5));
  CHECK(builtin("quadratic(I_2)").eval(v2(3, 4)) == doctest::Approx(12.5));
  CHECK(builtin("four_quadrant_max").eval(v2(1, 1)) == 0.0);
  CHECK(builtin("four_quadrant_max").eval(v2(0.2, 1)) == doctest::Approx(0.8));
  CHECK(builtin("quadratic(diag(2,5))").eval(v2(1, 1)) == doctest::Approx(3.5));
  CHECK(builtin("quadratic(-2*I2)").eval(v2(1, 1)) == doctest::Approx(-2.0));
}

TEST_CASE("builtin errors") {
  CHECK_THROWS_AS(builtin("nope"), UnknownBuiltin);
  Vec nan = v2(std::nan(""), 0);
  CHECK_THROWS_AS(builtin("abs_diff").eval(nan), InvalidPoint);
}

TEST_CASE("abs_plus_quad separates into |x1-x2| plus the square") {
  const auto m = builtin("abs_plus_quad");
  for (double x = -1; x <= 1; x += 0.125)
    for (double y = -1; y <= 1; y += 0.125) CHECK(m.eval(v2(x, y)) - (x * x + y * y) == std::abs(x - y));
}

TEST_CASE("crossing_max matches the closed form") {
  const auto m = builtin("crossing_max");
  for (double x = -1; x <= 1; x += 0.25)
    for (double y = -1; y <= 2; y += 0.25) CHECK(m.eval(v2(x, y)) == doctest::Approx(oracle::crossing_f(x, y)));
  CHECK(m.base_point(1) == doctest::Approx(oracle::crossing_ybar()));
  REQUIRE(!m.notes.empty());
  CHECK(m.notes.front().find("base-point discrepancy") != std::string::npos);
}

TEST_CASE("active sets") {
  const auto cm = builtin("crossing_max");
  CHECK(active_set(cm, v2(0, 0)).indices == std::vector<int>{0});
  CHECK(active_set(cm, v2(0, oracle::crossing_ybar())).indices.size() == 2);
  CHECK(active_set(builtin("abs_diff"), v2(0, 0)).indices.size() == 2);
}

TEST_CASE("subdifferential polytopes") {
  const auto ad = subdifferential_polytope(builtin("abs_diff"), v2(0, 0));
  REQUIRE(ad.generators.size() == 2);
  CHECK(((ad.generators[0] - v2(1, -1)).norm() < 1e-12 || (ad.generators[0] - v2(-1, 1)).norm() < 1e-12));

  const auto fq = subdifferential_polytope(builtin("four_quadrant_max"), v2(0, 0));
  for (const Vec& g : {v2(0, 0), v2(1, 1), v2(-1, 1), v2(1, -1), v2(-1, -1)}) {
    bool found = false;
    for (const Vec& h : fq.generators) found = found || (h - g).norm() < 1e-12;
    CHECK(found);
  }
  const auto cm = subdifferential_polytope(builtin("crossing_max"), v2(0, oracle::crossing_ybar()));
  REQUIRE(cm.generators.size() == 2);
  CHECK((cm.generators[0] - v2(0, 1 - std::sqrt(5.0))).norm() < 1e-12);
  CHECK((cm.generators[1] - v2(0, 1)).norm() < 1e-12);
}

TEST_CASE("generators are gradients of active pieces (finite differences)") {
  const auto cm = builtin("crossing_max");
  const Vec x = v2(0.1, 0.4);
  const auto poly = subdifferential_polytope(cm, x);
  REQUIRE(poly.generators.size() == 1);
  const Vec fd = fd_gradient([&](const Vec& y) { return cm.eval(y); }, x, 1e-6);
  CHECK((fd - poly.generators[0]).norm() <= 1e-5 * (1 + fd.norm()));
}

TEST_CASE("convexity flags hold on midpoint samples") {
  for (const char* name : {"abs_diff", "abs_plus_quad", "crossing_max", "quadratic(I2)"}) {
    const auto m = builtin(name);
    CHECK(m.flags.convex);
    int bad = 0;
    const auto lat = unit_directions(2, 40);
    for (std::size_t i = 0; i < lat.size(); ++i)
      for (std::size_t j = 0; j < lat.size(); ++j) {
        const Vec x = 0.7 * lat[i], y = 1.3 * lat[j] + v2(0.1, -0.2);
        const double fx = m.eval(x), fy = m.eval(y);
        if (m.eval(0.5 * (x + y)) > 0.5 * (fx + fy) + 1e-12 * (1 + std::abs(fx) + std::abs(fy))) ++bad;
      }
    CHECK(bad == 0);
  }
  CHECK_FALSE(builtin("four_quadrant_max").flags.convex);
}

TEST_CASE("singular subdifferential is {0} for Lipschitz models") {
  const auto s = singular_subdifferential(builtin("abs_diff"), v2(0, 0));
  REQUIRE(s.size() == 1);
  CHECK(s[0].norm() == 0.0);
}

TEST_CASE("value-only models refuse structural queries") {
  const auto m = make_custom("c", 1, [](const Vec& x) { return x(0) * x(0); }, {});
  CHECK(m.eval(Vec::Constant(1, 2.0)) == 4.0);
  CHECK_THROWS_AS(subdifferential_polytope(m, Vec::Zero(1)), CapabilityMissing);
}

TEST_CASE("problem JSON") {
  const auto m = load_problem_json(R"({"dim":2,"kind":"max_of_smooth","pieces":[
      {"type":"quadratic","A":[[2,0],[0,2]],"b":[0,-2],"c":1},
      {"type":"affine","a":[0,1],"b":0}],
      "flags":{"convex":true},"base_point":[0,0.3819660112501051]})");
  const Vec x = v2(0.3, 0.2);
  CHECK(m.eval(x) == doctest::Approx(oracle::crossing_f(0.3, 0.2)));
  CHECK(m.flags.convex);
  CHECK_THROWS_AS(load_problem_json("{\"dim\":2}"), ParseError);
}
