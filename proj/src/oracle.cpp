#include "vulab/oracle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vulab/errors.hpp"
#include "vulab/linalg.hpp"

namespace vulab {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::MaxOfSmooth:
      return "max_of_smooth";
    case ModelKind::SumOfSmoothAndPolyhedral:
      return "sum_of_smooth_and_polyhedral";
    case ModelKind::Custom:
      return "custom";
  }
  return "custom";
}

double FunctionModel::eval(const Vec& x) const {
  if (x.size() != dim) throw InvalidPoint("dimension mismatch");
  if (x.hasNaN()) throw InvalidPoint("NaN coordinate");
  if (structured()) return evaluate(branches, x);
  if (value_fn) return value_fn(x);
  throw CapabilityMissing("model '" + name + "' has no value oracle");
}

const MinMaxForm& FunctionModel::form() const {
  if (!structured())
    throw CapabilityMissing("model '" + name + "' has no piece structure");
  return branches;
}

int FunctionModel::piece_count() const {
  int c = 0;
  for (const auto& b : branches) c += static_cast<int>(b.size());
  return c;
}

double eval(const FunctionModel& model, const Vec& x) { return model.eval(x); }

ActiveSet active_set(const FunctionModel& model, const Vec& x, double tau) {
  const MinMaxForm& form = model.form();
  const double f = model.eval(x);
  const double tol = tau * (1.0 + std::abs(f));
  ActiveSet out;
  out.tolerance = tau;
  int offset = 0;
  for (const auto& branch : form) {
    std::vector<double> vals;
    for (const auto& p : branch) vals.push_back(p.value(x));
    double fb = -kInf;
    for (double v : vals) fb = std::max(fb, v);
    if (fb - f <= tol) {
      for (std::size_t i = 0; i < vals.size(); ++i)
        if (f - vals[i] <= tol) out.indices.push_back(offset + static_cast<int>(i));
    }
    offset += static_cast<int>(branch.size());
  }
  return out;
}

void add_unique(std::vector<Vec>& list, const Vec& g, double tol) {
  for (const Vec& e : list)
    if ((e - g).norm() <= tol) return;
  list.push_back(g);
}

SubdifferentialPolytope subdifferential_polytope(const FunctionModel& model, const Vec& x,
                                                 double tau) {
  if (!model.structured())
    throw CapabilityMissing("model '" + model.name + "' has no subgradient oracle");
  const ActiveSet act = active_set(model, x, tau);
  SubdifferentialPolytope poly;
  poly.point = x;
  poly.exact = true;
  std::vector<const SmoothPiece*> flat;
  for (const auto& b : model.branches)
    for (const auto& p : b) flat.push_back(&p);
  for (int i : act.indices) add_unique(poly.generators, flat[i]->gradient(x));
  return poly;
}

std::vector<Vec> singular_subdifferential(const FunctionModel& model, const Vec& x) {
  if (!model.flags.locally_lipschitz)
    throw CapabilityMissing("singular subdifferential requires a locally Lipschitz model");
  return {Vec::Zero(x.size())};
}

FunctionModel make_max_of_smooth(std::string name, int dim, std::vector<SmoothPiece> pieces,
                                 ModelFlags flags) {
  FunctionModel m;
  m.name = std::move(name);
  m.dim = dim;
  m.kind = ModelKind::MaxOfSmooth;
  m.pieces = pieces;
  m.branches = {std::move(pieces)};
  m.flags = flags;
  m.base_point = Vec::Zero(dim);
  return m;
}

FunctionModel make_sum(std::string name, int dim, std::vector<SmoothPiece> smooth,
                       std::vector<AffinePiece> polyhedral, ModelFlags flags) {
  FunctionModel m;
  m.name = std::move(name);
  m.dim = dim;
  m.kind = ModelKind::SumOfSmoothAndPolyhedral;
  m.pieces = smooth;
  m.polyhedral = polyhedral;
  m.flags = flags;
  m.base_point = Vec::Zero(dim);
  SmoothPiece s = sum_of(std::move(smooth));
  std::vector<SmoothPiece> branch;
  if (polyhedral.empty()) {
    branch.push_back(s);
  } else {
    for (const auto& a : polyhedral) branch.push_back(sum_of({s, affine_piece(a.a, a.b)}));
  }
  m.branches = {std::move(branch)};
  return m;
}

FunctionModel make_min_max(std::string name, int dim, MinMaxForm form, ModelFlags flags) {
  FunctionModel m;
  m.name = std::move(name);
  m.dim = dim;
  m.kind = ModelKind::Custom;
  for (const auto& b : form)
    for (const auto& p : b) m.pieces.push_back(p);
  m.branches = std::move(form);
  m.flags = flags;
  m.base_point = Vec::Zero(dim);
  return m;
}

FunctionModel make_custom(std::string name, int dim, std::function<double(const Vec&)> value,
                          ModelFlags flags) {
  FunctionModel m;
  m.name = std::move(name);
  m.dim = dim;
  m.kind = ModelKind::Custom;
  m.value_fn = std::move(value);
  m.flags = flags;
  m.base_point = Vec::Zero(dim);
  return m;
}

FunctionModel make_quadratic(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || n < 1) throw UnknownBuiltin("quadratic needs a square matrix");
  const Mat s = symmetrize(a);
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const double lmin = es.eigenvalues().minCoeff();
  ModelFlags flags;
  flags.convex = lmin >= -1e-12;
  flags.quadratic_minorant = QuadraticMinorant{0.0, std::max(0.0, -lmin)};
  std::ostringstream nm;
  nm << "quadratic(";
  nm << "[";
  for (int i = 0; i < n; ++i) {
    nm << (i ? ",[" : "[");
    for (int j = 0; j < n; ++j) nm << (j ? "," : "") << s(i, j);
    nm << "]";
  }
  nm << "])";
  FunctionModel m = make_max_of_smooth(nm.str(), n, {quadratic_piece(s, Vec::Zero(n), 0.0)}, flags);
  return m;
}

namespace {

FunctionModel abs_diff() {
  Vec a(2);
  a << 1.0, -1.0;
  ModelFlags flags;
  flags.convex = true;
  flags.quadratic_minorant = QuadraticMinorant{0.0, 0.0};
  FunctionModel m = make_max_of_smooth("abs_diff", 2, {affine_piece(a, 0.0), affine_piece(-a, 0.0)},
                                       flags);
  return m;
}

FunctionModel four_quadrant_max() {
  // max{0,|y|−|x|} = min over σ=±1 of max{0, y−σx, −y−σx}
  MinMaxForm form;
  for (double sigma : {1.0, -1.0}) {
    Vec a1(2), a2(2);
    a1 << -sigma, 1.0;
    a2 << -sigma, -1.0;
    form.push_back({affine_piece(Vec::Zero(2), 0.0), affine_piece(a1, 0.0), affine_piece(a2, 0.0)});
  }
  ModelFlags flags;
  flags.convex = false;
  flags.quadratic_minorant = QuadraticMinorant{0.0, 0.0};
  return make_min_max("four_quadrant_max", 2, std::move(form), flags);
}

FunctionModel crossing_max() {
  Mat a = 2.0 * Mat::Identity(2, 2);
  Vec b(2);
  b << 0.0, -2.0;
  Vec e2(2);
  e2 << 0.0, 1.0;
  ModelFlags flags;
  flags.convex = true;
  FunctionModel m = make_max_of_smooth(
      "crossing_max", 2, {quadratic_piece(a, b, 1.0), affine_piece(e2, 0.0)}, flags);
  m.base_point = Vec(2);
  m.base_point << 0.0, (3.0 - std::sqrt(5.0)) / 2.0;
  m.flags.quadratic_minorant = QuadraticMinorant{m.eval(m.base_point), 0.0};
  m.default_radius = 0.2;
  m.notes.push_back(
      "base-point discrepancy: this example is often stated with base point "
      "0 and v(u)=3/2-sqrt(9-4u^2)/2, but both pieces are active only at (0,(3-sqrt5)/2), where "
      "v(u)=(sqrt5-sqrt(5-4u^2))/2; this model uses the corrected base point (0,(3-sqrt5)/2)");
  return m;
}

FunctionModel abs_plus_quad() {
  Vec a(2);
  a << 1.0, -1.0;
  ModelFlags flags;
  flags.convex = true;
  flags.quadratic_minorant = QuadraticMinorant{0.0, 0.0};
  return make_sum("abs_plus_quad", 2,
                  {quadratic_piece(2.0 * Mat::Identity(2, 2), Vec::Zero(2), 0.0)},
                  {{a, 0.0}, {-a, 0.0}}, flags);
}

FunctionModel huber_source_abs() {
  ModelFlags flags;
  flags.convex = true;
  flags.quadratic_minorant = QuadraticMinorant{0.0, 0.0};
  return make_max_of_smooth("huber_source_abs", 1,
                            {affine_piece(Vec::Constant(1, 1.0), 0.0),
                             affine_piece(Vec::Constant(1, -1.0), 0.0)},
                            flags);
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Mat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw ParseError("matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return a;
}

Vec vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Mat parse_matrix_spec(std::string s) {
  if (!s.empty() && s[0] == '[') {
    try {
      return matrix_from_json(nlohmann::json::parse(s));
    } catch (const nlohmann::json::exception& e) {
      throw UnknownBuiltin("bad matrix literal '" + s + "': " + e.what());
    }
  }
  double scale = 1.0;
  if (const auto star = s.find('*'); star != std::string::npos) {
    try {
      scale = std::stod(s.substr(0, star));
    } catch (const std::exception&) {
      throw UnknownBuiltin("bad scalar in '" + s + "'");
    }
    s = s.substr(star + 1);
  } else if (!s.empty() && s[0] == '-') {
    scale = -1.0;
    s = s.substr(1);
  }
  if (s.rfind("diag(", 0) == 0 && s.back() == ')') {
    std::vector<double> d;
    std::stringstream ss(s.substr(5, s.size() - 6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        d.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw UnknownBuiltin("bad diagonal entry '" + item + "'");
      }
    }
    if (d.empty()) throw UnknownBuiltin("empty diag()");
    Vec dv = Eigen::Map<Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
    return scale * Mat(dv.asDiagonal());
  }
  if (!s.empty() && s[0] == 'I') {
    std::string rest = s.substr(1);
    if (!rest.empty() && rest[0] == '_') rest = rest.substr(1);
    int n = 2;
    // UTF-8 subscript digits ₁…₉ are E2 82 81…89
    if (rest.size() == 3 && static_cast<unsigned char>(rest[0]) == 0xE2 &&
        static_cast<unsigned char>(rest[1]) == 0x82) {
      n = static_cast<unsigned char>(rest[2]) - 0x80;
    } else if (!rest.empty()) {
      try {
        std::size_t used = 0;
        n = std::stoi(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(rest);
      } catch (const std::exception&) {
        throw UnknownBuiltin("bad identity size '" + rest + "'");
      }
    }
    if (n < 1 || n > 9) throw UnknownBuiltin("identity size out of range");
    return scale * Mat::Identity(n, n);
  }
  throw UnknownBuiltin("cannot parse matrix '" + s + "'");
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"abs_diff", "four_quadrant_max", "crossing_max", "abs_plus_quad", "huber_source_abs",
          "quadratic(A)"};
}

FunctionModel builtin(const std::string& raw) {
  const std::string name = strip_spaces(raw);
  if (name == "abs_diff") return abs_diff();
  if (name == "four_quadrant_max") return four_quadrant_max();
  if (name == "crossing_max") return crossing_max();
  if (name == "abs_plus_quad") return abs_plus_quad();
  if (name == "huber_source_abs") return huber_source_abs();
  if (name.rfind("quadratic(", 0) == 0 && name.back() == ')') {
    FunctionModel m = make_quadratic(parse_matrix_spec(name.substr(10, name.size() - 11)));
    m.name = name;
    return m;
  }
  throw UnknownBuiltin("'" + raw + "'");
}

FunctionModel load_problem_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  try {
    const int dim = j.at("dim").get<int>();
    if (dim < 1) throw ParseError("dim must be positive");
    const std::string kind = j.value("kind", std::string("max_of_smooth"));
    std::vector<SmoothPiece> pieces;
    for (const auto& p : j.value("pieces", nlohmann::json::array())) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "quadratic") {
        Mat a = matrix_from_json(p.at("A"));
        Vec b = p.contains("b") ? vector_from_json(p["b"]) : Vec::Zero(dim);
        if (a.rows() != dim || b.size() != dim) throw ParseError("piece dimension mismatch");
        pieces.push_back(quadratic_piece(a, b, p.value("c", 0.0)));
      } else if (type == "affine") {
        Vec a = vector_from_json(p.at("a"));
        if (a.size() != dim) throw ParseError("piece dimension mismatch");
        pieces.push_back(affine_piece(a, p.value("b", 0.0)));
      } else {
        throw ParseError("unknown piece type '" + type + "'");
      }
    }
    std::vector<AffinePiece> poly;
    for (const auto& p : j.value("polyhedral", nlohmann::json::array())) {
      Vec a = vector_from_json(p.at("a"));
      if (a.size() != dim) throw ParseError("polyhedral dimension mismatch");
      poly.push_back({a, p.value("b", 0.0)});
    }
    ModelFlags flags;
    if (j.contains("flags")) {
      const auto& f = j["flags"];
      flags.locally_lipschitz = f.value("locally_lipschitz", true);
      flags.convex = f.value("convex", false);
      if (f.contains("quadratic_minorant"))
        flags.quadratic_minorant = QuadraticMinorant{f["quadratic_minorant"].at("alpha").get<double>(),
                                                     f["quadratic_minorant"].at("R").get<double>()};
    }
    const std::string name = j.value("name", std::string("custom"));
    FunctionModel m;
    if (kind == "max_of_smooth") {
      if (pieces.empty()) throw ParseError("max_of_smooth needs pieces");
      m = make_max_of_smooth(name, dim, pieces, flags);
    } else if (kind == "sum_of_smooth_and_polyhedral") {
      m = make_sum(name, dim, pieces, poly, flags);
    } else {
      throw ParseError("unsupported kind '" + kind + "'");
    }
    if (j.contains("base_point")) {
      m.base_point = vector_from_json(j["base_point"]);
      if (m.base_point.size() != dim) throw ParseError("base_point dimension mismatch");
    }
    m.default_radius = j.value("radius", 1.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

FunctionModel load_problem(const std::string& source) {
  const std::string s = strip_spaces(source);
  if (s.size() > 5 && s.substr(s.size() - 5) == ".json") {
    std::ifstream in(source);
    if (!in) throw ParseError("cannot open problem file '" + source + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_problem_json(buf.str());
  }
  return builtin(source);
}

}  // namespace vulab
