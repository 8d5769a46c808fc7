// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "vulab/campaign.hpp"
#include "vulab/envelope.hpp"
#include "vulab/errors.hpp"
#include "vulab/jet2.hpp"
#include "vulab/linalg.hpp"
#include "vulab/manifold.hpp"
#include "vulab/oracle.hpp"
#include "vulab/tilt.hpp"
#include "vulab/ulag.hpp"
#include "vulab/vu.hpp"

using namespace vulab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat unit_col(double a, double b) {
  Mat m(2, 1);
  m << a, b;
  return m / m.norm();
}

ULagContext context_for(const std::string& name) {
  const FunctionModel m = builtin(name);
  const auto poly = subdifferential_polytope(m, m.base_point);
  VUFrame f = decompose(poly, lagrangian_anchor(poly), 1e-8, m.default_radius);
  f.x_bar = m.base_point;
  return make_context(m, f);
}

Json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return Json::parse(ss.str());
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("vulab_acceptance_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// 1. closed-form subjet membership on abs_diff
Outcome subjet_closed_form() {
  std::vector<Mat> qs;
  std::vector<Mat> all;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      for (int k = 0; k < 9; ++k) {
        const double a = -2 + 0.5 * i, c = -2 + 0.5 * j, b = -2 + 0.5 * k;
        if (std::abs(a + 2 * c + b) < 0.1) continue;
        Mat q(2, 2);
        q << a, c, c, b;
        all.push_back(q);
      }
  for (std::size_t i = 0; i < 200; ++i) qs.push_back(all[i * all.size() / 200]);
  const FunctionModel m = builtin("abs_diff");
  int agree = 0, members = 0;
  for (const Mat& q : qs) {
    const bool rule = oracle::abs_diff_member(q(0, 0), q(0, 1), q(1, 1));
    members += rule ? 1 : 0;
    const Membership v = subjet_membership(m, {Vec::Zero(2), Vec::Zero(2), q}).verdict;
    if (v == (rule ? Membership::Member : Membership::Rejected)) ++agree;
  }
  return {agree == 200 && members > 0 && members < 200,
          fmt::format("{}/200 agree ({} members by the sign rule)", agree, members)};
}

// 2. barrier cone of abs_diff
Outcome barrier_cone() {
  const FunctionModel m = builtin("abs_diff");
  const Vec diag = v2(1, 1) / std::sqrt(2.0);
  int wrong = 0, finite = 0;
  for (const Vec& h : unit_directions(2, 64)) {
    const bool fin = !rank1_support(m, Vec::Zero(2), Vec::Zero(2), h).divergent;
    const double angle = std::acos(std::min(1.0, std::abs(h.dot(diag))));
    finite += fin ? 1 : 0;
    if (fin != (angle <= M_PI / 180.0)) ++wrong;
  }
  const Mat u = unit_col(1, 1);
  const SecondOrderComponent c = second_order_component(m, Vec::Zero(2), Vec::Zero(2), 64, {}, &u);
  const double ang = c.u2_basis.cols() == 1 ? subspace_distance(c.u2_basis, u) : M_PI / 2;
  return {wrong == 0 && ang <= 1e-6,
          fmt::format("{} misclassified of 64 ({} finite), U² angle {:.2e}", wrong, finite, ang)};
}

// 3. degenerate decomposition
Outcome degenerate() {
  const FunctionModel m = builtin("four_quadrant_max");
  const auto poly = subdifferential_polytope(m, Vec::Zero(2));
  const VUFrame f = decompose(poly, Vec::Zero(2));
  const SecondOrderComponent c = second_order_component(m, Vec::Zero(2), Vec::Zero(2));
  ExperimentConfig cfg;
  cfg.problem = "four_quadrant_max";
  cfg.campaign = {"manifold"};
  const auto dir = scratch("degenerate");
  const RunResult r = run(cfg, dir);
  int passes = 0;
  for (const auto& rec : r.manifest) passes += rec.status == CheckStatus::Pass ? 1 : 0;
  std::ifstream csv(dir / "manifold_trace.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  std::filesystem::remove_all(dir);
  const bool ok = f.dim_u() == 0 && c.u2_basis.cols() == 0 && r.exit_code == 0 &&
                  passes == static_cast<int>(r.manifest.size()) && lines == 2;
  return {ok, fmt::format("dim U {}, dim U² {}, {}/{} manifold checks pass, {} trace node(s)", f.dim_u(),
                          c.u2_basis.cols(), passes, r.manifest.size(), lines - 1)};
}

// 4. VU subspaces of crossing_max and the base-point note
Outcome crossing_subspaces() {
  ExperimentConfig cfg;
  cfg.problem = "crossing_max";
  cfg.campaign = {"decompose"};
  const auto dir = scratch("decompose");
  const RunResult r = run(cfg, dir);
  const VUFrame f = frame_from_json(read_json(dir / "frame.json"));
  const std::string summary = read_json(dir / "decompose.json").dump();
  std::filesystem::remove_all(dir);
  const double au = f.dim_u() == 1 ? subspace_distance(f.u_basis, unit_col(1, 0)) : M_PI / 2;
  const double av = f.dim_v() == 1 ? subspace_distance(f.v_basis, unit_col(0, 1)) : M_PI / 2;
  const bool note = summary.find("base-point discrepancy") != std::string::npos;
  return {au <= 1e-8 && av <= 1e-8 && note && r.exit_code == 0,
          fmt::format("U angle {:.1e}, V angle {:.1e}, note {}", au, av, note ? "present" : "missing")};
}

// 5. selection v(u) and little-oh on crossing_max
Outcome selection() {
  const ULagContext ctx = context_for("crossing_max");
  const double ybar = oracle::crossing_ybar();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double u = -0.18 + 0.36 * i / 19.0;
    const VSelection s = v_of_u(ctx, Vec::Constant(1, u));
    const double y =
        oracle::scan_then_golden([&](double y) { return oracle::crossing_f(u, y); }, ybar - 0.2, ybar + 0.2);
    worst = std::max(worst, std::abs(s.v(0) - (y - ybar)));
  }
  const auto ratios = little_oh_check(ctx, {1e-3});
  return {worst <= 1e-6 && ratios[0] <= 1e-3,
          fmt::format("max |v − oracle| {:.2e} over 20 nodes, ‖v‖/‖u‖ at 1e-3: {:.2e}", worst, ratios[0])};
}

// 6. convexity of L
Outcome convexity() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"crossing_max", "abs_plus_quad", "abs_diff"}) {
    const ULagContext ctx = context_for(name);
    const ConvexityReport r = convexity_check(ctx, u_lattice(ctx.dim_u(), 0.95 * ctx.eps, 41));
    const bool pass = r.worst <= 1e-9 * r.scale;
    ok = ok && pass && r.pairs > 0;
    detail += fmt::format("{} worst {:.1e} ({} pairs); ", name, r.worst, r.pairs);
  }
  return {ok, detail};
}

// 7. conjugacy identity
Outcome conjugacy() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"abs_plus_quad", "crossing_max"}) {
    const ULagContext ctx = context_for(name);
    std::vector<Vec> zg;
    for (const Vec& u : u_lattice(1, ctx.eps / 2, 5)) zg.push_back(grad_L(ctx, u).z_u);
    const ConjugacyReport r = conjugacy_identity_check(ctx, zg, 401);
    ok = ok && r.max_residual <= 1e-3;
    detail += fmt::format("{} residual {:.1e}; ", name, r.max_residual);
  }
  return {ok, detail};
}

// 8. C^{1,1} estimate
Outcome c11() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"crossing_max", "abs_plus_quad"}) {
    const ManifoldTrace tr = trace(context_for(name), -1.0, 21);
    const C11Refinement r = c11_refinement(tr);
    ok = ok && r.finite && r.stable;
    if (std::string(name) == "abs_plus_quad") ok = ok && std::abs(r.coarse - 2.0) <= 1e-4;
    detail += fmt::format("{} L̂ {:.6f} → {:.6f} (ratio {:.3f}); ", name, r.coarse, r.fine, r.ratio);
  }
  return {ok, detail};
}

// 9. chain formula
Outcome chain() {
  const ManifoldTrace tr = trace(context_for("crossing_max"), -1.0, 21);
  const ChainReport r = grad_chain_check(tr);
  int usable = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) usable += tr.usable(i) ? 1 : 0;
  return {r.max_residual <= 1e-5 && usable == static_cast<int>(tr.size()),
          fmt::format("max residual {:.1e} over {} nodes, {} generator pairings", r.max_residual, usable,
                      r.generators)};
}

// 10. lower Taylor estimate
Outcome taylor() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"crossing_max", "abs_plus_quad"}) {
    const ULagContext ctx = context_for(name);
    const ManifoldTrace tr = trace(ctx, -1.0, 9);
    const CertifiedQ cq = certified_q(ctx, Vec::Zero(1));
    const TaylorReport t = taylor_lower_check(tr, cq.q);
    const TaylorReport s = taylor_lower_check(tr, cq.q + Mat::Identity(1, 1));
    ok = ok && cq.verdict == Membership::Member && t.worst_margin >= -1e-9 && s.worst_margin < -1e-9;
    detail += fmt::format("{} Q {:.4f} margin {:.1e}, inflated {:.1e}; ", name, cq.q(0, 0), t.worst_margin,
                          s.worst_margin);
  }
  return {ok, detail};
}

// 11. tilt criteria
Outcome tilt() {
  const StabilityVerdict apq = tilt_stability_test(builtin("abs_plus_quad"), Vec::Zero(2), 1.0);
  const StabilityVerdict ad = tilt_stability_test(builtin("abs_diff"), Vec::Zero(2), 1.0);
  const double beta_apq =
      tilt_criterion_c11(limiting_hessians(moreau_model(builtin("abs_plus_quad"), 1.0), Vec::Zero(2), Vec::Zero(2)));
  const double beta_ad =
      tilt_criterion_c11(limiting_hessians(moreau_model(builtin("abs_diff"), 1.0), Vec::Zero(2), Vec::Zero(2)));
  const bool witness0 = ad.witness && ad.witness->norm() == 0.0;
  const bool ok = apq.status == TiltStatus::Stable && apq.lipschitz <= 0.5 + 1e-3 && beta_apq > 0 &&
                  ad.status == TiltStatus::Unstable && witness0 && std::abs(beta_ad) <= 1e-6;
  return {ok, fmt::format("abs_plus_quad L̂ {:.4f} β̂ {:.4f}; abs_diff {} witness z=0 {} β̂ {:.1e}", apq.lipschitz,
                          beta_apq, to_string(ad.status), witness0 ? "yes" : "no", beta_ad)};
}

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

// 12. appendix: para-convexity, Huber, Hessian duality
Outcome appendix() {
  double para = 0.0;
  for (const auto& [name, r] : std::vector<std::pair<std::string, double>>{
           {"abs_diff", 0.0}, {"quadratic(diag(2,5))", 0.0}, {"quadratic(-2*I2)", 2.0}}) {
    const auto prof = second_order_component(builtin(name), Vec::Zero(2), Vec::Zero(2), 64).profile;
    para = std::max(para, para_convexity_check(prof, r).violation);
  }
  const FunctionModel abs1 = builtin("huber_source_abs");
  double huber = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = -2.0 + 4.0 * i / 99.0;
    huber = std::max(huber, std::abs(moreau_envelope(abs1, 0.5, Vec::Constant(1, x)).value - oracle::huber(x, 0.5)));
  }
  const double d1 = hessian_duality_check(builtin("quadratic(diag(2,5))"), Vec::Zero(2)).residual;
  const double d2 = hessian_duality_check(builtin("quadratic(I2)"), Vec::Zero(2)).residual;
  const double d3 = hessian_duality_check(quartic(), Vec::Constant(1, 0.5)).residual;
  const bool ok = para <= 1e-9 && huber <= 1e-6 && d1 <= 1e-3 && d2 <= 1e-6 && d3 <= 1e-2;
  return {ok, fmt::format("para-convexity {:.1e}, Huber {:.1e}, duality {:.1e}/{:.1e}/{:.1e}", para, huber, d1,
                          d2, d3)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"subjet closed form on abs_diff", subjet_closed_form},
      {"barrier cone and U² of abs_diff", barrier_cone},
      {"degenerate four_quadrant_max", degenerate},
      {"crossing_max subspaces and note", crossing_subspaces},
      {"selection and little-oh", selection},
      {"convexity of L", convexity},
      {"conjugacy identity", conjugacy},
      {"C11 estimate under refinement", c11},
      {"chain formula", chain},
      {"lower Taylor estimate", taylor},
      {"tilt criteria", tilt},
      {"appendix checks", appendix},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::cout << fmt::format("criterion {:>2} {} : {} [{:.2f}s] {}", i + 1, o.pass ? "PASS" : "FAIL",
                             criteria[i].first, secs, o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}
