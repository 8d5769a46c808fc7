#include "vulab/vu.hpp"

#include <cmath>

#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"

namespace vulab {

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json columns_to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(to_json(Vec(m.col(j))));
  return a;
}

Json rows_to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
  return a;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_string()) {
      const std::string s = j[i].get<std::string>();
      v(static_cast<Eigen::Index>(i)) = s == "inf" ? kInf : s == "-inf" ? -kInf : std::nan("");
    } else {
      v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
  }
  return v;
}

Mat columns_from_json(const Json& j, int rows) {
  if (!j.is_array()) throw ParseError("expected a list of vectors");
  Mat m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    Vec v = vec_from_json(j[c]);
    if (v.size() != rows) throw ParseError("basis vector has wrong length");
    m.col(static_cast<Eigen::Index>(c)) = v;
  }
  return m;
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Vec relative_interior_point(const SubdifferentialPolytope& poly) {
  if (poly.generators.empty()) throw PreconditionFailed("empty polytope");
  Vec c = Vec::Zero(poly.generators.front().size());
  for (const Vec& g : poly.generators) c += g;
  return c / static_cast<double>(poly.generators.size());
}

bool in_hull(const std::vector<Vec>& generators, const Vec& p, double tol) {
  if (generators.empty()) return false;
  return project_onto_hull(generators, p).distance <= tol;
}

VUFrame decompose(const SubdifferentialPolytope& poly, const Vec& z_bar, double rank_tol,
                  double eps) {
  if (poly.generators.empty()) throw PreconditionFailed("empty polytope");
  if (!in_hull(poly.generators, z_bar, 1e-8)) throw AnchorNotInHull("anchor is not in co(generators)");
  const auto n = z_bar.size();
  const auto m = static_cast<Eigen::Index>(poly.generators.size());
  Mat diffs(n, m);
  for (Eigen::Index i = 0; i < m; ++i) diffs.col(i) = poly.generators[static_cast<std::size_t>(i)] - z_bar;

  VUFrame f;
  f.x_bar = poly.point;
  f.z_bar = z_bar;
  f.eps = eps;
  Eigen::JacobiSVD<Mat> svd(diffs, Eigen::ComputeFullU);
  const Vec s = svd.singularValues();
  int rank = 0;
  const double smax = s.size() ? s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (smax > 0.0 && s(i) > rank_tol * smax) ++rank;
  f.v_basis = svd.matrixU().leftCols(rank);
  canonicalize_signs(f.v_basis);
  f.v_basis = f.v_basis.unaryExpr([](double a) { return std::abs(a) < 1e-14 ? 0.0 : a; });
  if (rank == 0) {
    f.u_basis = Mat::Identity(n, n);
  } else {
    f.u_basis = svd.matrixU().rightCols(n - rank);
    canonicalize_signs(f.u_basis);
    f.u_basis = f.u_basis.unaryExpr([](double a) { return std::abs(a) < 1e-14 ? 0.0 : a; });
  }
  return f;
}

Coordinates project(const VUFrame& frame, const Vec& x) {
  return {frame.u_basis.transpose() * x, frame.v_basis.transpose() * x};
}

Vec assemble(const VUFrame& frame, const Vec& u, const Vec& v) {
  Vec x = Vec::Zero(frame.dim());
  if (u.size()) x += frame.u_basis * u;
  if (v.size()) x += frame.v_basis * v;
  return x;
}

double support(const std::vector<Vec>& generators, const Vec& u) {
  double s = -kInf;
  for (const Vec& g : generators) s = std::max(s, g.dot(u));
  return s;
}

DecompositionReport check_decomposition(const FunctionModel& model, const VUFrame& frame,
                                        double tau) {
  const SubdifferentialPolytope poly = subdifferential_polytope(model, frame.x_bar, tau);
  if (!poly.exact) throw PreconditionFailed("polytope is not exact");
  DecompositionReport rep;
  if (frame.dim_u() > 0) {
    for (const Vec& u : directions_in(frame.u_basis, 100)) {
      rep.u_width = std::max(rep.u_width, std::abs(support(poly.generators, u) + support(poly.generators, -u)));
      ++rep.u_samples;
    }
  }
  const Vec zu = frame.u_basis.transpose() * frame.z_bar;
  for (const Vec& g : poly.generators)
    rep.u_component_spread = std::max(rep.u_component_spread, (frame.u_basis.transpose() * g - zu).norm());
  for (const Vec& u : unit_directions(frame.dim(), 100)) {
    if (angle_to_subspace(u, frame.u_basis) <= 1e-6) continue;
    ++rep.off_u_samples;
    if (support(poly.generators, u) + support(poly.generators, -u) > 1e-12) rep.witnesses.push_back(u);
  }
  return rep;
}

Json frame_to_json(const VUFrame& frame) {
  Json j;
  j["x_bar"] = to_json(frame.x_bar);
  j["z_bar"] = to_json(frame.z_bar);
  j["U_basis"] = columns_to_json(frame.u_basis);
  j["V_basis"] = columns_to_json(frame.v_basis);
  j["eps"] = frame.eps;
  return j;
}

VUFrame frame_from_json(const Json& j) {
  VUFrame f;
  try {
    f.x_bar = vec_from_json(j.at("x_bar"));
    f.z_bar = vec_from_json(j.at("z_bar"));
    const int n = static_cast<int>(f.x_bar.size());
    f.u_basis = columns_from_json(j.at("U_basis"), n);
    f.v_basis = columns_from_json(j.at("V_basis"), n);
    f.eps = j.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  return f;
}

}  // namespace vulab
