#include "vulab/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "vulab/envelope.hpp"
#include "vulab/errors.hpp"
#include "vulab/jet2.hpp"
#include "vulab/linalg.hpp"
#include "vulab/manifold.hpp"
#include "vulab/oracle.hpp"
#include "vulab/parallel.hpp"
#include "vulab/tilt.hpp"
#include "vulab/ulag.hpp"
#include "vulab/vu.hpp"

namespace vulab {

std::string report_schema_version() { return "1"; }

const std::vector<std::string>& campaign_names() {
  static const std::vector<std::string> names{"decompose", "tilt-test", "lagrangian",
                                              "subjet",    "manifold",  "appendix"};
  return names;
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Inconclusive:
      return "inconclusive";
    case CheckStatus::Skipped:
      return "skipped";
  }
  return "fail";
}

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw InvalidConfig(path + ": " + what);
}

double get_number(const Json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

int get_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

std::optional<double> get_radius(const Json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_number(obj.at(key), path + "." + key);
}

void reject_unknown(const Json& obj, const std::vector<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      bad(path.empty() ? key : path + "." + key, "unknown field");
  }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) bad("<root>", "expected an object");
  reject_unknown(j, {"problem", "base_point", "radii", "grids", "tolerances", "campaign", "output_dir",
                     "deterministic"},
                 "");
  ExperimentConfig c;
  if (!j.contains("problem") || !j.at("problem").is_string()) bad("problem", "expected a string");
  c.problem = j.at("problem").get<std::string>();
  if (j.contains("base_point") && !j.at("base_point").is_null()) {
    const Json& b = j.at("base_point");
    if (!b.is_array()) bad("base_point", "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < b.size(); ++i) v.push_back(get_number(b[i], fmt::format("base_point[{}]", i)));
    c.base_point = v;
  }
  if (j.contains("radii")) {
    const Json& r = j.at("radii");
    if (!r.is_object()) bad("radii", "expected an object");
    reject_unknown(r, {"eps", "eps_v", "delta", "tilt_radius"}, "radii");
    c.radii.eps = get_radius(r, "eps", "radii");
    c.radii.eps_v = get_radius(r, "eps_v", "radii");
    c.radii.delta = get_radius(r, "delta", "radii");
    c.radii.tilt_radius = get_radius(r, "tilt_radius", "radii");
  }
  if (j.contains("grids")) {
    const Json& g = j.at("grids");
    if (!g.is_object()) bad("grids", "expected an object");
    reject_unknown(g, {"resolution", "t_grid", "dir_grid"}, "grids");
    if (g.contains("resolution")) c.grids.resolution = get_int(g.at("resolution"), "grids.resolution");
    if (g.contains("dir_grid")) c.grids.dir_grid = get_int(g.at("dir_grid"), "grids.dir_grid");
    if (g.contains("t_grid")) {
      const Json& t = g.at("t_grid");
      if (!t.is_array()) bad("grids.t_grid", "expected an array of numbers");
      for (std::size_t i = 0; i < t.size(); ++i)
        c.grids.t_grid.push_back(get_number(t[i], fmt::format("grids.t_grid[{}]", i)));
    }
  }
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) bad("tolerances", "expected an object");
    Tolerances& tol = c.tolerances;
    const std::map<std::string, double*> fields{
        {"rank_tol", &tol.rank_tol},       {"tau", &tol.tau},
        {"subspace", &tol.subspace},       {"convexity", &tol.convexity},
        {"little_oh", &tol.little_oh},     {"conjugacy", &tol.conjugacy},
        {"c11_refinement", &tol.c11_refinement}, {"chain", &tol.chain},
        {"taylor", &tol.taylor},           {"para_convexity", &tol.para_convexity},
        {"moreau_gradient", &tol.moreau_gradient}, {"consistency", &tol.consistency},
        {"duality", &tol.duality}};
    for (const auto& [key, value] : t.items()) {
      const auto it = fields.find(key);
      if (it == fields.end()) bad("tolerances." + key, "unknown field");
      *it->second = get_number(value, "tolerances." + key);
    }
  }
  if (!j.contains("campaign") || !j.at("campaign").is_array()) bad("campaign", "expected an array of names");
  for (std::size_t i = 0; i < j.at("campaign").size(); ++i) {
    const Json& e = j.at("campaign")[i];
    if (!e.is_string()) bad(fmt::format("campaign[{}]", i), "expected a string");
    c.campaign.push_back(e.get<std::string>());
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) bad("output_dir", "expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("deterministic")) {
    if (!j.at("deterministic").is_boolean()) bad("deterministic", "expected a boolean");
    c.deterministic = j.at("deterministic").get<bool>();
  }
  validate(c);
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["problem"] = c.problem;
  j["base_point"] = c.base_point ? Json(*c.base_point) : Json(nullptr);
  j["radii"] = {{"eps", optional_number(c.radii.eps)},
                {"eps_v", optional_number(c.radii.eps_v)},
                {"delta", optional_number(c.radii.delta)},
                {"tilt_radius", optional_number(c.radii.tilt_radius)}};
  j["grids"] = {{"resolution", c.grids.resolution}, {"t_grid", c.grids.t_grid}, {"dir_grid", c.grids.dir_grid}};
  const Tolerances& t = c.tolerances;
  j["tolerances"] = {{"rank_tol", t.rank_tol},
                     {"tau", t.tau},
                     {"subspace", t.subspace},
                     {"convexity", t.convexity},
                     {"little_oh", t.little_oh},
                     {"conjugacy", t.conjugacy},
                     {"c11_refinement", t.c11_refinement},
                     {"chain", t.chain},
                     {"taylor", t.taylor},
                     {"para_convexity", t.para_convexity},
                     {"moreau_gradient", t.moreau_gradient},
                     {"consistency", t.consistency},
                     {"duality", t.duality}};
  j["campaign"] = c.campaign;
  j["output_dir"] = c.output_dir;
  j["deterministic"] = c.deterministic;
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.problem.empty()) bad("problem", "must not be empty");
  auto positive = [](const std::optional<double>& r, const char* path) {
    if (r && !(*r > 0.0)) bad(path, "radius must be positive");
  };
  positive(c.radii.eps, "radii.eps");
  positive(c.radii.eps_v, "radii.eps_v");
  positive(c.radii.delta, "radii.delta");
  positive(c.radii.tilt_radius, "radii.tilt_radius");
  if (c.grids.resolution < 2) bad("grids.resolution", "must be at least 2");
  if (c.grids.dir_grid < 2) bad("grids.dir_grid", "must be at least 2");
  for (std::size_t i = 0; i < c.grids.t_grid.size(); ++i)
    if (!(c.grids.t_grid[i] > 0.0)) bad(fmt::format("grids.t_grid[{}]", i), "must be positive");
  if (c.campaign.empty()) bad("campaign", "must not be empty");
  for (std::size_t i = 0; i < c.campaign.size(); ++i) {
    const auto& names = campaign_names();
    if (std::find(names.begin(), names.end(), c.campaign[i]) == names.end())
      bad(fmt::format("campaign[{}]", i), "unknown campaign '" + c.campaign[i] + "'");
  }
  if (!c.deterministic) bad("deterministic", "only deterministic mode is supported");
}

int exit_code_for(const std::vector<CheckRecord>& manifest) {
  bool inconclusive = false;
  for (const auto& r : manifest) {
    if (r.status == CheckStatus::Fail) return 1;
    inconclusive = inconclusive || r.status == CheckStatus::Inconclusive;
  }
  return inconclusive ? 2 : 0;
}

// ---------------------------------------------------------------- campaigns

namespace {

struct Outcome {
  CheckStatus status = CheckStatus::Pass;
  std::string reason;
};

Outcome pass_if(bool ok, const std::string& why_not) {
  return ok ? Outcome{CheckStatus::Pass, ""} : Outcome{CheckStatus::Fail, why_not};
}

Outcome skipped(const std::string& reason) { return {CheckStatus::Skipped, reason}; }

class Recorder {
 public:
  Recorder(std::string campaign, std::vector<CheckRecord>& manifest) : campaign_(std::move(campaign)), manifest_(manifest) {}

  void record(const std::string& check, const Outcome& o) {
    manifest_.push_back({campaign_, check, o.status, o.reason});
    Json e;
    e["check"] = check;
    e["status"] = to_string(o.status);
    if (!o.reason.empty()) e["reason"] = o.reason;
    checks_.push_back(e);
  }

  // Runs body; library errors become failures, budget exhaustion inconclusive.
  void guarded(const std::string& check, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const SolverBudgetExceeded& e) {
      o = {CheckStatus::Inconclusive, e.what()};
    } catch (const Error& e) {
      o = {CheckStatus::Fail, e.what()};
    }
    record(check, o);
  }

  void skip_all(const std::vector<std::string>& checks, const std::string& reason) {
    for (const auto& c : checks) record(c, skipped(reason));
  }

  const Json& checks() const { return checks_; }

 private:
  std::string campaign_;
  std::vector<CheckRecord>& manifest_;
  Json checks_ = Json::array();
};

struct Setup {
  ExperimentConfig cfg;
  FunctionModel model;
  Vec x_bar;
  double eps = 1.0;
  double eps_v = 1.0;
  double delta = 0.25;
  double tilt_radius = 0.1;
  Jet2Config jet;
  std::optional<StabilityVerdict> tilt;
  std::optional<SecondOrderComponent> so2;
  std::string so2_error;
  bool so2_done = false;
};

struct Files {
  std::vector<std::pair<std::string, std::string>> items;
  void add(std::string name, std::string content) { items.emplace_back(std::move(name), std::move(content)); }
};

std::string num(double x) { return fmt::format("{:.17g}", x); }

Json header(const Setup& s, const std::string& campaign) {
  Json j;
  j["schema_version"] = report_schema_version();
  j["campaign"] = campaign;
  j["problem"] = s.model.name;
  j["base_point"] = to_json(s.x_bar);
  return j;
}

double moreau_lambda(const FunctionModel& m) {
  const double r = m.flags.quadratic_minorant ? m.flags.quadratic_minorant->r : 0.0;
  return r < 0.5 ? 1.0 : 0.5 / r;
}

VUFrame lagrangian_frame(const Setup& s) {
  const SubdifferentialPolytope poly = subdifferential_polytope(s.model, s.x_bar, s.cfg.tolerances.tau);
  return decompose(poly, lagrangian_anchor(poly), s.cfg.tolerances.rank_tol, s.eps);
}

const StabilityVerdict& ensure_tilt(Setup& s) {
  if (!s.tilt) s.tilt = tilt_stability_test(s.model, s.x_bar, s.eps, s.tilt_radius, 11);
  return *s.tilt;
}

void ensure_so2(Setup& s) {
  if (s.so2_done) return;
  s.so2_done = true;
  try {
    const VUFrame frame = lagrangian_frame(s);
    s.so2 = second_order_component(s.model, s.x_bar, frame.z_bar, s.cfg.grids.dir_grid, s.jet, &frame.u_basis);
  } catch (const Error& e) {
    s.so2_error = e.what();
  }
}

// -------------------------------------------------------------- decompose

Json run_decompose(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "decompose");
  j["kind"] = to_string(s.model.kind);
  j["dim"] = s.model.dim;
  j["notes"] = s.model.notes;
  const std::vector<std::string> checks{"u_support_width", "u_component_spread", "v_directions_nonsmooth"};
  if (!s.model.structured()) {
    rec.skip_all(checks, "value-only model has no subdifferential oracle");
    return j;
  }
  const SubdifferentialPolytope poly = subdifferential_polytope(s.model, s.x_bar, s.cfg.tolerances.tau);
  Json gens = Json::array();
  for (const Vec& g : poly.generators) gens.push_back(to_json(g));
  j["generators"] = gens;
  j["polytope_exact"] = poly.exact;
  const VUFrame frame = decompose(poly, relative_interior_point(poly), s.cfg.tolerances.rank_tol, s.eps);
  j["frame"] = frame_to_json(frame);
  j["dim_U"] = frame.dim_u();
  j["dim_V"] = frame.dim_v();
  files.add("frame.json", frame_to_json(frame).dump(2) + "\n");
  const DecompositionReport rep = check_decomposition(s.model, frame, s.cfg.tolerances.tau);
  j["report"] = {{"u_width", rep.u_width},
                 {"u_component_spread", rep.u_component_spread},
                 {"u_samples", rep.u_samples},
                 {"off_u_samples", rep.off_u_samples},
                 {"nonsmooth_witnesses", rep.witnesses.size()}};
  const double tol = s.cfg.tolerances.subspace;
  rec.record(checks[0], pass_if(rep.u_width <= tol, fmt::format("support width {} along U", rep.u_width)));
  rec.record(checks[1], pass_if(rep.u_component_spread <= tol,
                                fmt::format("generators differ by {} on U", rep.u_component_spread)));
  rec.record(checks[2], pass_if(static_cast<int>(rep.witnesses.size()) == rep.off_u_samples,
                                "some direction outside U has zero support width"));
  return j;
}

// -------------------------------------------------------------- tilt-test

Json run_tilt(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "tilt-test");
  const std::vector<std::string> checks{"tilt_verdict", "prox_regularity", "strict_order2", "criteria_agree"};
  if (!s.model.structured()) {
    rec.skip_all(checks, "value-only model has no minimization oracle");
    return j;
  }
  const SubdifferentialPolytope poly = subdifferential_polytope(s.model, s.x_bar, s.cfg.tolerances.tau);
  if (!in_hull(poly.generators, Vec::Zero(s.model.dim))) {
    rec.skip_all(checks, "0 is not in co of the subdifferential at the base point");
    return j;
  }
  const StabilityVerdict& v = ensure_tilt(s);
  j["verdict"] = to_string(v.status);
  j["lipschitz"] = number(v.lipschitz);
  j["witness"] = v.witness ? to_json(*v.witness) : Json(nullptr);
  j["grid_radius"] = v.grid_radius;
  j["probes"] = v.probes.size();
  std::ostringstream csv;
  for (int a = 0; a < s.model.dim; ++a) csv << "z" << a << ",";
  csv << "minimizer_count,";
  for (int a = 0; a < s.model.dim; ++a) csv << "m" << a << ",";
  csv << "value,boundary_active\n";
  for (const auto& p : v.probes) {
    for (int a = 0; a < s.model.dim; ++a) csv << num(p.z(a)) << ",";
    csv << p.minimizers.size() << ",";
    for (int a = 0; a < s.model.dim; ++a) csv << num(p.minimizers.front()(a)) << ",";
    csv << num(p.value) << "," << (p.boundary_active ? 1 : 0) << "\n";
  }
  files.add("tilt_probes.csv", csv.str());
  rec.record(checks[0], v.status == TiltStatus::Inconclusive
                            ? Outcome{CheckStatus::Inconclusive, "solver budget exhausted on some probe"}
                            : Outcome{});

  std::optional<double> prox_r;
  rec.guarded(checks[1], [&] {
    prox_r = prox_regularity_test(s.model, s.x_bar, Vec::Zero(s.model.dim), s.eps, default_r_grid());
    j["prox_regularity_r"] = prox_r ? Json(*prox_r) : Json(nullptr);
    return pass_if(prox_r.has_value(), "no r in the grid satisfies the prox-regularity inequality");
  });

  std::optional<double> beta;
  rec.guarded(checks[2], [&] {
    beta = strict_order2_test(s.model, s.x_bar, Vec::Zero(s.model.dim), s.eps, default_beta_grid());
    j["strict_order2_beta"] = beta ? Json(*beta) : Json(0.0);
    return Outcome{};
  });

  rec.guarded(checks[3], [&]() -> Outcome {
    if (v.status == TiltStatus::Inconclusive) return {CheckStatus::Inconclusive, "tilt verdict inconclusive"};
    const double lambda = moreau_lambda(s.model);
    const FunctionModel fl = moreau_model(s.model, lambda);
    const HessianBundle bundle = limiting_hessians(fl, s.x_bar, Vec::Zero(s.model.dim));
    const double beta_c = tilt_criterion_c11(bundle);
    j["moreau_lambda"] = lambda;
    j["moreau_beta"] = beta_c;
    j["moreau_samples"] = bundle.samples.size();
    const bool coder = beta_c > 1e-6;
    const bool strict = beta.has_value();
    j["criteria"] = {{"tilt_stable", v.stable}, {"strict_order2", strict}, {"coderivative_positive", coder}};
    return pass_if(coder == v.stable && strict == v.stable,
                   "tilt verdict, strict order-2 test and coderivative criterion disagree");
  });
  return j;
}

// -------------------------------------------------------------- lagrangian

Json run_lagrangian(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "lagrangian");
  const std::vector<std::string> checks{"selection_interior", "gradient_consistency", "convexity",
                                        "little_oh",          "conjugacy",            "envelope_agreement"};
  if (!s.model.structured()) {
    rec.skip_all(checks, "value-only model has no subdifferential oracle");
    return j;
  }
  const VUFrame frame = lagrangian_frame(s);
  const ULagContext ctx = make_context(s.model, frame, s.eps_v);
  const int k = ctx.dim_u();
  const int n = s.model.dim;
  j["anchor"] = to_json(ctx.anchor);
  j["dim_U"] = k;
  j["eps"] = s.eps;
  j["eps_v"] = s.eps_v;

  const int res = k <= 1 ? s.cfg.grids.resolution : std::min(s.cfg.grids.resolution, 11);
  const std::vector<Vec> grid = u_lattice(k, s.eps, res);
  std::vector<VSelection> sel(grid.size());
  std::vector<Vec> z(grid.size());
  std::vector<double> lv(grid.size()), hull(grid.size(), 0.0);
  std::vector<std::string> errors(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    sel[i] = v_of_u(ctx, grid[i]);
    lv[i] = L_eps(ctx, grid[i]);
    z[i] = Vec::Constant(k, std::nan(""));
    try {
      const GradientEstimate g = grad_L(ctx, grid[i]);
      z[i] = g.z_u;
      hull[i] = g.hull_distance;
    } catch (const PreconditionFailed&) {
      // rim node, no centred difference available
    } catch (const InconsistentGradient& e) {
      errors[i] = e.what();
    }
  });
  std::ostringstream csv;
  for (int a = 0; a < k; ++a) csv << "u" << a << ",";
  for (int a = 0; a < ctx.dim_v(); ++a) csv << "v" << a << ",";
  csv << "L,";
  for (int a = 0; a < k; ++a) csv << "zU" << a << ",";
  csv << "boundary_active,budget_exceeded,candidates,hull_distance\n";
  int boundary = 0;
  int inconsistent = 0;
  std::string first_error;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < k; ++a) csv << num(grid[i](a)) << ",";
    for (int a = 0; a < ctx.dim_v(); ++a) csv << num(sel[i].v(a)) << ",";
    csv << num(lv[i]) << ",";
    for (int a = 0; a < k; ++a) csv << num(z[i](a)) << ",";
    csv << (sel[i].boundary_active ? 1 : 0) << "," << (sel[i].budget_exceeded ? 1 : 0) << ","
        << sel[i].candidates << "," << num(hull[i]) << "\n";
    boundary += sel[i].boundary_active ? 1 : 0;
    if (!errors[i].empty()) {
      ++inconsistent;
      if (first_error.empty()) first_error = errors[i];
    }
  }
  files.add("lagrangian.csv", csv.str());
  j["nodes"] = grid.size();
  j["boundary_nodes"] = boundary;
  rec.record(checks[0], boundary == 0 ? Outcome{}
                                      : Outcome{CheckStatus::Inconclusive,
                                                fmt::format("v(u) on the V-ball boundary at {} nodes", boundary)});
  rec.record(checks[1], pass_if(inconsistent == 0, first_error));

  rec.guarded(checks[2], [&] {
    const std::vector<Vec> cgrid = u_lattice(k, s.eps, k <= 1 ? std::min(s.cfg.grids.resolution, 41) : 9);
    const ConvexityReport c = convexity_check(ctx, cgrid);
    j["convexity"] = {{"worst", number(c.worst)}, {"scale", c.scale}, {"pairs", c.pairs}};
    return pass_if(c.worst <= s.cfg.tolerances.convexity * c.scale,
                   fmt::format("midpoint violation {}", c.worst));
  });

  rec.guarded(checks[3], [&] {
    if (k == 0) return skipped("dim U = 0");
    const std::vector<double> radii{1e-1 * s.eps, 1e-2 * s.eps, 1e-3};
    const std::vector<double> ratios = little_oh_check(ctx, radii);
    j["little_oh"] = {{"radii", radii}, {"ratios", ratios}};
    return pass_if(ratios.back() <= s.cfg.tolerances.little_oh,
                   fmt::format("|v(u)|/|u| = {} at |u| = 1e-3", ratios.back()));
  });

  rec.guarded(checks[4], [&] {
    if (k < 1 || k > 2) return skipped("conjugacy check needs dim U in {1,2}");
    if (n > 3) return skipped("conjugacy check needs n <= 3");
    std::vector<Vec> zg;
    for (const Vec& u : u_lattice(k, s.eps / 2.0, 5)) zg.push_back(grad_L(ctx, u).z_u);
    const ConjugacyReport c = conjugacy_identity_check(ctx, zg, k == 1 ? 401 : 41);
    std::ostringstream cc;
    for (int a = 0; a < k; ++a) cc << "z" << a << ",";
    cc << "kv_conjugate,h_conjugate\n";
    for (std::size_t i = 0; i < zg.size(); ++i) {
      for (int a = 0; a < k; ++a) cc << num(zg[i](a)) << ",";
      cc << num(c.lhs[i]) << "," << num(c.rhs[i]) << "\n";
    }
    files.add("conjugacy.csv", cc.str());
    j["conjugacy"] = {{"max_residual", c.max_residual}, {"boundary_supremum", c.boundary_supremum}};
    return pass_if(c.max_residual <= s.cfg.tolerances.conjugacy,
                   fmt::format("conjugacy residual {}", c.max_residual));
  });

  rec.guarded(checks[5], [&] {
    if (n > 3) return skipped("envelope check needs n <= 3");
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i].norm() > s.eps / 2.0) continue;
      Vec w(n);
      w << grid[i], sel[i].v;
      pts.push_back(w);
    }
    const AgreementReport a = envelope_agreement_check(s.model, frame, s.eps_v, pts, n <= 2 ? 81 : 21);
    j["envelope_agreement"] = {{"max_residual", a.max_residual}, {"max_grid_error", a.max_grid_error}};
    return pass_if(a.within_bound, fmt::format("residual {} exceeds twice the grid error", a.max_residual));
  });
  return j;
}

// -------------------------------------------------------------- subjet

std::vector<Mat> abs_diff_candidates(int count) {
  std::vector<Mat> all;
  for (int a = 0; a < 9; ++a)
    for (int g = 0; g < 9; ++g)
      for (int b = 0; b < 9; ++b) {
        const double al = -2.0 + 0.5 * a, ga = -2.0 + 0.5 * g, be = -2.0 + 0.5 * b;
        if (std::abs(al + 2.0 * ga + be) < 0.1) continue;
        Mat q(2, 2);
        q << al, ga, ga, be;
        all.push_back(q);
      }
  std::vector<Mat> out;
  const double stride = static_cast<double>(all.size()) / count;
  for (int i = 0; i < count; ++i) out.push_back(all[static_cast<std::size_t>(i * stride)]);
  return out;
}

Json run_subjet(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "subjet");
  const std::vector<std::string> checks{"u2_subspace", "u2_in_u", "profile_symmetry", "uniform_bound",
                                        "closed_form_agreement"};
  if (!s.model.structured()) {
    rec.skip_all(checks, "value-only model has no subdifferential oracle");
    return j;
  }
  ensure_so2(s);
  if (!s.so2) {
    rec.record(checks[0], {CheckStatus::Fail, s.so2_error});
    rec.skip_all({checks[1], checks[2], checks[3]}, "U² unavailable");
  } else {
    const SecondOrderComponent& c = *s.so2;
    files.add("subjet_profile.csv", profile_to_csv(c.profile));
    j["dim_U2"] = c.u2_basis.cols();
    j["U2_basis"] = columns_to_json(c.u2_basis);
    j["angle_to_U"] = c.angle_to_u;
    int finite = 0;
    for (const auto& v : c.profile.values) finite += v.divergent ? 0 : 1;
    j["finite_directions"] = finite;
    j["directions"] = c.profile.directions.size();
    rec.record(checks[0], {});
    rec.record(checks[1], pass_if(c.inside_u, fmt::format("U² is {} rad away from U", c.angle_to_u)));
    rec.guarded(checks[2], [&] {
      const auto& dirs = c.profile.directions;
      int mismatches = 0;
      for (std::size_t a = 0; a < dirs.size(); ++a)
        for (std::size_t b = 0; b < dirs.size(); ++b)
          if ((dirs[a] + dirs[b]).norm() < 1e-12 &&
              (c.profile.values[a].divergent != c.profile.values[b].divergent ||
               (!c.profile.values[a].divergent &&
                std::abs(c.profile.values[a].value - c.profile.values[b].value) >
                    1e-9 * (1.0 + std::abs(c.profile.values[a].value)))))
            ++mismatches;
      return pass_if(mismatches == 0, fmt::format("{} antipodal pairs disagree", mismatches));
    });
    rec.guarded(checks[3], [&] {
      if (c.u2_basis.cols() == 0) return skipped("U² is trivial");
      const VUFrame frame = lagrangian_frame(s);
      const double m = uniform_bound_check(s.model, s.x_bar, frame.z_bar, c.u2_basis, s.jet);
      j["uniform_bound"] = number(m);
      return pass_if(std::isfinite(m), "uniform bound is not finite");
    });
  }
  rec.guarded(checks[4], [&] {
    if (s.model.name != "abs_diff") return skipped("no closed-form membership rule for this model");
    const Vec zero = Vec::Zero(2);
    int disagreements = 0;
    std::ostringstream cc;
    cc << "alpha,gamma,beta,rule,verdict\n";
    const std::vector<Mat> qs = abs_diff_candidates(200);
    std::vector<Membership> verdicts(qs.size());
    parallel_for(qs.size(), [&](std::size_t i) { verdicts[i] = subjet_membership(s.model, {zero, zero, qs[i]}).verdict; });
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const Mat& q = qs[i];
      const bool member = q(0, 0) + 2.0 * q(0, 1) + q(1, 1) <= 0.0;
      const bool agree = (verdicts[i] == Membership::Member) == member && verdicts[i] != Membership::Inconclusive;
      disagreements += agree ? 0 : 1;
      cc << num(q(0, 0)) << "," << num(q(0, 1)) << "," << num(q(1, 1)) << "," << (member ? "member" : "rejected")
         << "," << to_string(verdicts[i]) << "\n";
    }
    files.add("subjet_candidates.csv", cc.str());
    j["closed_form_agreement"] = {{"candidates", qs.size()}, {"disagreements", disagreements}};
    return pass_if(disagreements == 0, fmt::format("{} disagreements with the sign rule", disagreements));
  });
  return j;
}

// -------------------------------------------------------------- manifold

Json run_manifold(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "manifold");
  const std::vector<std::string> checks{"trace",      "g_L_consistency", "c11",           "grad_chain",
                                        "taylor_lower", "taylor_sharpness", "dv_continuity", "envelope_agreement"};
  if (!s.model.structured()) {
    rec.skip_all(checks, "value-only model has no subdifferential oracle");
    return j;
  }
  ensure_so2(s);
  if (!s.so2) {
    rec.skip_all(checks, "U² unavailable: " + s.so2_error);
    return j;
  }
  const SecondOrderComponent& so2 = *s.so2;
  const int k = static_cast<int>(so2.u2_basis.cols());
  const VUFrame frame = lagrangian_frame(s);
  j["dim_U2"] = k;
  j["degenerate"] = k == 0;
  if (k > 0) {
    const StabilityVerdict& tv = ensure_tilt(s);
    j["tilt_verdict"] = to_string(tv.status);
    if (!tv.stable) {
      rec.skip_all(checks, "base point is not tilt-stable (" + to_string(tv.status) + ")");
      return j;
    }
    if (!so2.inside_u) {
      rec.record(checks[0], {CheckStatus::Fail, "U² is not contained in U"});
      rec.skip_all({checks.begin() + 1, checks.end()}, "no trace");
      return j;
    }
  }
  const ULagContext ctx = make_context(s.model, frame, k == 0 ? Mat(s.model.dim, 0) : so2.u2_basis, s.eps_v);
  std::optional<ManifoldTrace> tr;
  rec.guarded(checks[0], [&] {
    tr = trace(ctx, s.delta, s.cfg.grids.resolution);
    int boundary = 0;
    for (const auto& d : tr->diagnostics) boundary += d.boundary_active ? 1 : 0;
    j["delta"] = tr->delta;
    j["shrinks"] = tr->shrinks;
    j["nodes"] = tr->size();
    j["boundary_nodes"] = boundary;
    files.add("manifold_trace.csv", trace_to_csv(*tr));
    return boundary == 0 ? Outcome{}
                         : Outcome{CheckStatus::Inconclusive, fmt::format("{} boundary-active nodes", boundary)};
  });
  if (!tr) {
    rec.skip_all({checks.begin() + 1, checks.end()}, "no trace");
    return j;
  }
  const Tolerances& tol = s.cfg.tolerances;
  rec.guarded(checks[1], [&] {
    double worst = 0.0;
    for (const auto& d : tr->diagnostics) worst = std::max(worst, d.consistency);
    j["consistency"] = worst;
    return pass_if(worst <= tol.consistency * (1.0 + s.model.eval(s.x_bar)), fmt::format("g-L mismatch {}", worst));
  });
  rec.guarded(checks[2], [&] {
    const C11Refinement c = c11_refinement(*tr);
    j["c11"] = {{"lipschitz", number(c.coarse)}, {"lipschitz_refined", number(c.fine)}, {"ratio", number(c.ratio)}};
    return pass_if(c.finite && std::abs(c.ratio - 1.0) <= tol.c11_refinement,
                   fmt::format("Lipschitz estimate {} vs {} under refinement", c.coarse, c.fine));
  });
  rec.guarded(checks[3], [&] {
    const ChainReport c = grad_chain_check(*tr);
    j["grad_chain"] = {{"max_residual", c.max_residual}, {"generators", c.generators}};
    return pass_if(c.max_residual <= tol.chain, fmt::format("chain residual {}", c.max_residual));
  });
  Mat q;
  rec.guarded(checks[4], [&]() -> Outcome {
    const CertifiedQ cq = certified_q(ctx, Vec::Zero(k));
    q = cq.q;
    j["taylor_q"] = rows_to_json(q);
    j["taylor_q_membership"] = to_string(cq.verdict);
    if (cq.verdict != Membership::Member) return {CheckStatus::Inconclusive, "Q could not be certified"};
    const TaylorReport t = taylor_lower_check(*tr, q);
    j["taylor_worst_margin"] = number(t.worst_margin);
    return pass_if(t.worst_margin >= -tol.taylor, fmt::format("worst margin {}", t.worst_margin));
  });
  rec.guarded(checks[5], [&]() -> Outcome {
    if (k == 0) return {};
    if (q.size() == 0) return skipped("no certified Q");
    const TaylorReport t = taylor_lower_check(*tr, q + Mat::Identity(k, k));
    j["taylor_inflated_margin"] = number(t.worst_margin);
    return pass_if(t.worst_margin < -tol.taylor, "inflated Q was not detected");
  });
  rec.guarded(checks[6], [&] {
    const ContinuityReport c = dv_continuity_check(*tr);
    j["dv_continuity"] = {{"resolutions", c.resolutions}, {"max_jump", c.max_jump}, {"ratio", c.ratio}};
    const bool flat = c.max_jump.front() <= 1e-9;
    const bool halves = c.ratio >= 0.35 && c.ratio <= 0.65;
    return pass_if(flat || (c.decreasing && halves), fmt::format("jump ratio {} under refinement", c.ratio));
  });
  rec.guarded(checks[7], [&] {
    const int n = s.model.dim;
    if (n > 3) return skipped("envelope check needs n <= 3");
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < tr->size(); ++i) {
      const Vec x = ctx.point(tr->u_nodes[i], tr->v_values[i]) - frame.x_bar;
      Vec w(n);
      w << frame.u_basis.transpose() * x, frame.v_basis.transpose() * x;
      pts.push_back(w);
    }
    const AgreementReport a = envelope_agreement_check(s.model, frame, s.eps_v, pts, n <= 2 ? 81 : 21);
    j["envelope_agreement"] = {{"max_residual", a.max_residual}, {"max_grid_error", a.max_grid_error}};
    return pass_if(a.within_bound, fmt::format("residual {} exceeds twice the grid error", a.max_residual));
  });
  return j;
}

// -------------------------------------------------------------- appendix

Json run_appendix(Setup& s, Recorder& rec, Files& files) {
  Json j = header(s, "appendix");
  const Tolerances& tol = s.cfg.tolerances;
  rec.guarded("huber_closed_form", [&] {
    const FunctionModel abs1 = builtin("huber_source_abs");
    const double lambda = 0.5;
    std::vector<double> err(100);
    parallel_for(100, [&](std::size_t i) {
      const double x = -2.0 + 4.0 * static_cast<double>(i) / 99.0;
      const double huber = std::abs(x) <= lambda ? x * x / (2.0 * lambda) : std::abs(x) - lambda / 2.0;
      err[i] = std::abs(moreau_envelope(abs1, lambda, Vec::Constant(1, x)).value - huber);
    });
    const double worst = *std::max_element(err.begin(), err.end());
    j["huber_max_error"] = worst;
    return pass_if(worst <= 1e-6, fmt::format("Huber error {}", worst));
  });
  if (!s.model.structured()) {
    rec.skip_all({"moreau_gradient", "limiting_hessians", "para_convexity", "hessian_duality"},
                 "value-only model has no proximal oracle");
    return j;
  }
  const double lambda = moreau_lambda(s.model);
  j["moreau_lambda"] = lambda;
  rec.guarded("moreau_gradient", [&]() -> Outcome {
    const auto dirs = unit_directions(s.model.dim, 8);
    std::vector<double> err(dirs.size(), -1.0);
    parallel_for(dirs.size(), [&](std::size_t i) {
      const Vec x = s.x_bar + 0.1 * s.eps * dirs[i];
      const MoreauValue m = moreau_envelope(s.model, lambda, x);
      if (m.prox_count > 1) return;
      const Vec fd = fd_gradient([&](const Vec& y) { return moreau_envelope(s.model, lambda, y).value; }, x, 1e-5);
      err[i] = (fd - m.gradient).norm();
    });
    const double worst = *std::max_element(err.begin(), err.end());
    const auto used = std::count_if(err.begin(), err.end(), [](double e) { return e >= 0.0; });
    j["moreau_gradient_error"] = worst;
    j["moreau_gradient_points"] = used;
    if (used == 0) return skipped("proximal point is multivalued at every sample");
    return pass_if(worst <= tol.moreau_gradient, fmt::format("gradient mismatch {}", worst));
  });
  rec.guarded("limiting_hessians", [&]() -> Outcome {
    // one bundle per extreme subgradient, since ∇f(x_k) → z̄ selects a piece
    const SubdifferentialPolytope poly = subdifferential_polytope(s.model, s.x_bar, tol.tau);
    Json bundles = Json::array();
    double asym = 0.0;
    int total = 0;
    for (const Vec& g : poly.generators) {
      try {
        const HessianBundle b = limiting_hessians(s.model, s.x_bar, g);
        for (const auto& smp : b.samples) asym = std::max(asym, (smp.hessian - smp.hessian.transpose()).norm());
        total += static_cast<int>(b.samples.size());
        bundles.push_back({{"z_bar", to_json(g)}, {"samples", b.samples.size()}, {"source", to_string(b.source)},
                           {"c11_beta", tilt_criterion_c11(b)}});
      } catch (const EmptyBundle&) {
        bundles.push_back({{"z_bar", to_json(g)}, {"samples", 0}});
      }
    }
    j["limiting_hessians"] = bundles;
    if (total == 0) return skipped("no differentiable sample points near the base point");
    return pass_if(asym <= 1e-8, "unsymmetric Hessian sample");
  });
  rec.guarded("para_convexity", [&]() -> Outcome {
    ensure_so2(s);
    if (!s.so2) return skipped("rank-one profile unavailable: " + s.so2_error);
    const double r = s.model.flags.quadratic_minorant ? s.model.flags.quadratic_minorant->r : 0.0;
    const ParaConvexityReport p = para_convexity_check(s.so2->profile, r);
    j["para_convexity"] = {{"violation", p.violation}, {"pairs", p.pairs}, {"r", r}};
    return pass_if(p.violation <= tol.para_convexity, fmt::format("violation {}", p.violation));
  });
  rec.guarded("hessian_duality", [&]() -> Outcome {
    if (!s.model.flags.convex) return skipped("model is not convex");
    if (active_set(s.model, s.x_bar).indices.size() != 1)
      return skipped("model is not twice differentiable at the base point");
    try {
      const DualityReport d = hessian_duality_check(s.model, s.x_bar);
      j["hessian_duality"] = {{"residual", d.residual}, {"q", rows_to_json(d.q)},
                              {"conjugate_hessian", rows_to_json(d.conjugate_hessian)}};
      return pass_if(d.residual <= tol.duality, fmt::format("duality residual {}", d.residual));
    } catch (const SingularHessian& e) {
      return skipped(e.what());
    }
  });
  (void)files;
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir_arg) {
  validate(cfg);
  Setup s;
  s.cfg = cfg;
  s.model = load_problem(cfg.problem);
  if (cfg.base_point) {
    s.x_bar = Eigen::Map<const Vec>(cfg.base_point->data(), static_cast<Eigen::Index>(cfg.base_point->size()));
    if (s.x_bar.size() != s.model.dim) throw InvalidConfig("base_point: wrong dimension");
  } else {
    s.x_bar = s.model.base_point.size() == s.model.dim ? s.model.base_point : Vec::Zero(s.model.dim);
  }
  s.eps = cfg.radii.eps.value_or(s.model.default_radius);
  s.eps_v = cfg.radii.eps_v.value_or(s.eps);
  s.delta = cfg.radii.delta.value_or(s.eps / 4.0);
  s.tilt_radius = cfg.radii.tilt_radius.value_or(s.eps / 10.0);
  if (!cfg.grids.t_grid.empty()) s.jet.t_grid = cfg.grids.t_grid;
  s.jet.tau = cfg.tolerances.tau;

  const std::filesystem::path out_dir = out_dir_arg.empty() ? std::filesystem::path(cfg.output_dir) : out_dir_arg;
  std::filesystem::create_directories(out_dir);

  RunResult result;
  for (const std::string& name : cfg.campaign) {
    Recorder rec(name, result.manifest);
    Files files;
    Json summary;
    if (name == "decompose") summary = run_decompose(s, rec, files);
    else if (name == "tilt-test") summary = run_tilt(s, rec, files);
    else if (name == "lagrangian") summary = run_lagrangian(s, rec, files);
    else if (name == "subjet") summary = run_subjet(s, rec, files);
    else if (name == "manifold") summary = run_manifold(s, rec, files);
    else summary = run_appendix(s, rec, files);
    summary["checks"] = rec.checks();
    write_file(out_dir / (name + ".json"), summary.dump(2) + "\n");
    for (const auto& [file, content] : files.items) write_file(out_dir / file, content);
    result.summaries[name] = summary;
  }
  result.exit_code = exit_code_for(result.manifest);

  Json manifest;
  manifest["schema_version"] = report_schema_version();
  manifest["problem"] = s.model.name;
  Json checks = Json::array();
  std::map<std::string, int> counts{{"pass", 0}, {"fail", 0}, {"inconclusive", 0}, {"skipped", 0}};
  for (const auto& r : result.manifest) {
    Json e{{"campaign", r.campaign}, {"check", r.check}, {"status", to_string(r.status)}};
    if (!r.reason.empty()) e["reason"] = r.reason;
    checks.push_back(e);
    ++counts[to_string(r.status)];
  }
  manifest["checks"] = checks;
  manifest["counts"] = counts;
  manifest["exit_code"] = result.exit_code;
  manifest["config"] = config_to_json(cfg);
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  Json meta{{"schema_version", report_schema_version()}, {"timestamp", stamp}, {"threads", worker_count()}};
  write_file(out_dir / "metadata.json", meta.dump(2) + "\n");
  return result;
}

}  // namespace vulab
