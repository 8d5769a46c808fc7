#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vulab/local_solver.hpp"
#include "vulab/oracle.hpp"

using namespace vulab;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

/// Minimum of a 2-D function on a ball by a dense polar grid.
double brute_min(const std::function<double(const Vec&)>& f, const Vec& c, double r, int n = 400) {
  double best = f(c);
  for (int i = 1; i <= n; ++i)
    for (int j = 0; j < 4 * n; ++j) {
      const double rho = r * i / n, th = 2 * M_PI * j / (4 * n);
      best = std::min(best, f(c + rho * v2(std::cos(th), std::sin(th))));
    }
  return best;
}
}  // namespace

TEST_CASE("minimax of the crossing pieces reaches the kink") {
  const auto m = builtin("crossing_max");
  const LocalResult r = minimize_max(m.form()[0], v2(0.5, 0.9), Ball{v2(0, 0), 10.0}, SolverConfig{});
  CHECK_FALSE(r.budget_exceeded);
  CHECK(r.x(0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(r.x(1) == doctest::Approx(oracle::crossing_ybar()).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(oracle::crossing_ybar()).epsilon(1e-9));
}

TEST_CASE("tilted minimization matches a brute-force polar grid") {
  const auto m = builtin("abs_plus_quad");
  const Vec z = v2(0.7, 0.1);
  const MinMaxForm form = add_terms(m.form(), -z, 0.0, Vec::Zero(2));
  const Ball ball{Vec::Zero(2), 1.0};
  const MultistartResult r = multistart_minimize(form, ball, SolverConfig{});
  const double brute =
      brute_min([&](const Vec& x) { return m.eval(x) - z.dot(x); }, Vec::Zero(2), 1.0);
  CHECK(r.value <= brute + 1e-9);
  CHECK(r.value >= brute - 1e-4);
  CHECK(r.minimizers.size() == 1);
  CHECK_FALSE(r.boundary_active);
}

TEST_CASE("multistart finds both minimizers of a double well") {
  // min over branches of one quadratic each: (x∓1)² + y²
  MinMaxForm form = {{quadratic_piece(2 * Mat::Identity(2, 2), v2(-2, 0), 1.0)},
                     {quadratic_piece(2 * Mat::Identity(2, 2), v2(2, 0), 1.0)}};
  const MultistartResult r = multistart_minimize(form, Ball{Vec::Zero(2), 2.0}, SolverConfig{});
  REQUIRE(r.minimizers.size() == 2);
  CHECK(std::abs(r.minimizers[0](0)) == doctest::Approx(1.0));
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("boundary minimizers are flagged") {
  const SmoothPiece p = affine_piece(v2(1, 0), 0.0);
  const MultistartResult r = multistart_minimize({{p}}, Ball{Vec::Zero(2), 1.0}, SolverConfig{});
  CHECK(r.boundary_active);
  CHECK(r.value == doctest::Approx(-1.0));
}

TEST_CASE("ball projection") {
  const Ball b{v2(1, 1), 2.0};
  CHECK((b.project(v2(5, 1)) - v2(3, 1)).norm() < 1e-15);
  CHECK(b.on_boundary(v2(3, 1)));
  CHECK_FALSE(b.on_boundary(v2(2, 1)));
}

TEST_CASE("start lattice is deterministic and inside the ball") {
  const Ball b{Vec::Zero(3), 1.0};
  const auto s1 = start_lattice(b, SolverConfig{});
  const auto s2 = start_lattice(b, SolverConfig{});
  REQUIRE(s1.size() == s2.size());
  CHECK(s1.size() >= 27);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK((s1[i] - s2[i]).norm() == 0.0);
    CHECK(s1[i].norm() <= 1.0 + 1e-12);
  }
}
