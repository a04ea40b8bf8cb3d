#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "cardopt/problem.hpp"

namespace cardopt {

/// Parameters of the generated problem families. Fixed-seed generators are
/// reproducible byte-for-byte in their emitted JSON.
struct BuiltinParams {
  int n = 6;
  int kappa = 2;
  std::uint64_t seed = 1;
  double noise = 0.01;  ///< sparse_lsq observation noise scale
  double rho = 1.0;     ///< portfolio risk/return trade-off
};

/// Explicit quadratic problem data: f(x) = x'Qx/2 + c'x with affine
/// constraints A_ineq x <= b_ineq and A_eq x = b_eq.
struct QuadraticData {
  int n = 0;
  int kappa = 0;
  Mat q;
  Vec c;
  Mat a_ineq;
  Vec b_ineq;
  Mat a_eq;
  Vec b_eq;
  std::string name = "quadratic";
};

/// Reference to a named generator and its parameters.
struct BuiltinRef {
  std::string kind;
  BuiltinParams params;
};

/// Serializable problem description: either explicit quadratic data or a
/// built-in generator tag.
using ProblemSpec = std::variant<QuadraticData, BuiltinRef>;

namespace detail {

inline Problem make_disk2d() {
  Problem problem;
  problem.n = 2;
  problem.kappa = 1;
  problem.m = 1;
  problem.p = 0;
  problem.name = "disk2d";
  problem.f = [](const Vec& x) { return x.squaredNorm(); };
  problem.grad_f = [](const Vec& x) -> Vec { return 2.0 * x; };
  problem.hess_f = [](const Vec&) -> Mat { return 2.0 * Mat::Identity(2, 2); };
  problem.g = [](const Vec& x) -> Vec {
    Vec g(1);
    g(0) = x.squaredNorm() - 1.0;
    return g;
  };
  problem.jac_g = [](const Vec& x) -> Mat { return 2.0 * x.transpose(); };
  problem.hess_g = [](const Vec&, int) -> Mat { return 2.0 * Mat::Identity(2, 2); };
  return problem;
}

inline Problem make_dist3d() {
  Problem problem;
  problem.n = 3;
  problem.kappa = 1;
  problem.m = 0;
  problem.p = 0;
  problem.name = "dist3d";
  Vec target(3);
  target << 0.0, 1.0, 2.0;
  problem.f = [target](const Vec& x) { return (x - target).squaredNorm(); };
  problem.grad_f = [target](const Vec& x) -> Vec { return 2.0 * (x - target); };
  problem.hess_f = [](const Vec&) -> Mat { return 2.0 * Mat::Identity(3, 3); };
  return problem;
}

/// min |Ax - b|^2 with seeded Gaussian A (2n x n) and a kappa-sparse ground
/// truth; the noise scale keeps the true support recoverable at desk scale.
inline Problem make_sparse_lsq(const BuiltinParams& params) {
  if (!(params.kappa > 0 && params.kappa < params.n))
    throw UnknownProblem("sparse_lsq requires 0 < kappa < n");
  const int n = params.n;
  const int rows = 2 * n;
  SplitMix64 rng(params.seed);
  Mat a(rows, n);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.next_gaussian();
  Vec x_true = Vec::Zero(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  for (int k = 0; k < params.kappa; ++k) {
    double sign = rng.next_uniform() < 0.5 ? -1.0 : 1.0;
    x_true(order[k]) = sign * (1.0 + rng.next_uniform());
  }
  Vec b = a * x_true;
  for (int i = 0; i < rows; ++i) b(i) += params.noise * rng.next_gaussian();

  Problem problem;
  problem.n = n;
  problem.kappa = params.kappa;
  problem.m = 0;
  problem.p = 0;
  problem.name = "sparse_lsq";
  problem.f = [a, b](const Vec& x) { return (a * x - b).squaredNorm(); };
  problem.grad_f = [a, b](const Vec& x) -> Vec { return 2.0 * a.transpose() * (a * x - b); };
  Mat hess = 2.0 * a.transpose() * a;
  problem.hess_f = [hess](const Vec&) { return hess; };
  return problem;
}

/// min x' Sigma x - rho r' x  s.t.  e'x = 1, x >= 0 (as plain inequalities),
/// |x|_0 <= kappa, with a seeded positive-definite Sigma.
inline Problem make_portfolio(const BuiltinParams& params) {
  if (!(params.kappa > 0 && params.kappa < params.n))
    throw UnknownProblem("portfolio requires 0 < kappa < n");
  const int n = params.n;
  SplitMix64 rng(params.seed);
  Mat factors(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) factors(i, j) = rng.next_gaussian();
  Mat sigma = factors.transpose() * factors / static_cast<double>(n) +
              0.1 * Mat::Identity(n, n);
  Vec returns(n);
  for (int i = 0; i < n; ++i) returns(i) = 0.05 + 0.10 * rng.next_uniform();
  const double rho = params.rho;

  Problem problem;
  problem.n = n;
  problem.kappa = params.kappa;
  problem.m = n;
  problem.p = 1;
  problem.name = "portfolio";
  problem.f = [sigma, returns, rho](const Vec& x) {
    return x.dot(sigma * x) - rho * returns.dot(x);
  };
  problem.grad_f = [sigma, returns, rho](const Vec& x) -> Vec {
    return 2.0 * sigma * x - rho * returns;
  };
  problem.hess_f = [sigma](const Vec&) -> Mat { return 2.0 * sigma; };
  problem.g = [](const Vec& x) -> Vec { return -x; };
  problem.jac_g = [n](const Vec&) -> Mat { return -Mat::Identity(n, n); };
  problem.hess_g = [n](const Vec&, int) { return Mat::Zero(n, n); };
  problem.h = [](const Vec& x) -> Vec {
    Vec h(1);
    h(0) = x.sum() - 1.0;
    return h;
  };
  problem.jac_h = [n](const Vec&) -> Mat { return Mat::Ones(1, n); };
  problem.hess_h = [n](const Vec&, int) { return Mat::Zero(n, n); };
  return problem;
}

using nlohmann::json;

inline json matrix_to_json(const Mat& m) {
  json flat = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

inline json vector_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vec vector_from_json(const json& doc, const std::string& field, int expected = -1) {
  if (!doc.contains(field)) {
    if (expected <= 0) return Vec(0);
    throw ParseError(field, "missing");
  }
  const json& arr = doc.at(field);
  if (!arr.is_array()) throw ParseError(field, "expected an array of numbers");
  Vec v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(field, "expected an array of numbers");
    v(i) = arr[i].get<double>();
  }
  if (expected >= 0 && v.size() != expected)
    throw ParseError(field, "expected length " + std::to_string(expected));
  return v;
}

inline Mat matrix_from_json(const json& doc, const std::string& field, int rows, int cols) {
  if (rows == 0) return Mat(0, cols);
  if (!doc.contains(field)) throw ParseError(field, "missing");
  Vec flat = vector_from_json(doc, field);
  if (flat.size() != static_cast<Eigen::Index>(rows) * cols)
    throw ParseError(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " row-major entries");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
  return m;
}

}  // namespace detail

/// Instantiates a built-in problem family by name:
/// disk2d (unit-disk toy, n=2, kappa=1), dist3d (distance toy, n=3, kappa=1),
/// sparse_lsq (seeded sparse least squares), portfolio (seeded mean-variance
/// model with a cardinality cap).
inline Problem builtin(const std::string& name, const BuiltinParams& params = {}) {
  if (name == "disk2d") return detail::make_disk2d();
  if (name == "dist3d") return detail::make_dist3d();
  if (name == "sparse_lsq") return detail::make_sparse_lsq(params);
  if (name == "portfolio") return detail::make_portfolio(params);
  throw UnknownProblem("unknown built-in problem '" + name + "'");
}

inline Problem make_problem(const ProblemSpec& spec) {
  if (std::holds_alternative<BuiltinRef>(spec)) {
    const auto& ref = std::get<BuiltinRef>(spec);
    return builtin(ref.kind, ref.params);
  }
  const auto& q = std::get<QuadraticData>(spec);
  Problem problem =
      make_quadratic_problem(q.kappa, q.q, q.c, q.a_ineq, q.b_ineq, q.a_eq, q.b_eq, q.name);
  return problem;
}

inline nlohmann::json to_json(const ProblemSpec& spec) {
  using detail::json;
  json doc;
  if (std::holds_alternative<BuiltinRef>(spec)) {
    const auto& ref = std::get<BuiltinRef>(spec);
    doc["kind"] = ref.kind;
    if (ref.kind == "sparse_lsq" || ref.kind == "portfolio") {
      doc["n"] = ref.params.n;
      doc["kappa"] = ref.params.kappa;
      doc["seed"] = ref.params.seed;
      if (ref.kind == "sparse_lsq") doc["noise"] = ref.params.noise;
      if (ref.kind == "portfolio") doc["rho"] = ref.params.rho;
    }
    return doc;
  }
  const auto& q = std::get<QuadraticData>(spec);
  doc["kind"] = "quadratic";
  doc["name"] = q.name;
  doc["n"] = q.n;
  doc["kappa"] = q.kappa;
  doc["Q"] = detail::matrix_to_json(q.q);
  doc["c"] = detail::vector_to_json(q.c);
  doc["A_ineq"] = detail::matrix_to_json(q.a_ineq);
  doc["b_ineq"] = detail::vector_to_json(q.b_ineq);
  doc["A_eq"] = detail::matrix_to_json(q.a_eq);
  doc["b_eq"] = detail::vector_to_json(q.b_eq);
  return doc;
}

inline ProblemSpec problem_spec_from_json(const nlohmann::json& doc) {
  using detail::json;
  if (!doc.is_object()) throw ParseError("$", "expected a JSON object");
  std::string kind = doc.value("kind", "quadratic");
  if (kind == "disk2d" || kind == "dist3d") return BuiltinRef{kind, {}};
  if (kind == "sparse_lsq" || kind == "portfolio") {
    BuiltinRef ref{kind, {}};
    if (doc.contains("n")) ref.params.n = doc.at("n").get<int>();
    if (doc.contains("kappa")) ref.params.kappa = doc.at("kappa").get<int>();
    if (doc.contains("seed")) ref.params.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("noise")) ref.params.noise = doc.at("noise").get<double>();
    if (doc.contains("rho")) ref.params.rho = doc.at("rho").get<double>();
    if (!(ref.params.kappa > 0 && ref.params.kappa < ref.params.n))
      throw ParseError("kappa", "requires 0 < kappa < n");
    return ref;
  }
  if (kind != "quadratic") throw ParseError("kind", "unknown problem kind '" + kind + "'");

  QuadraticData q;
  if (!doc.contains("n") || !doc.at("n").is_number_integer()) throw ParseError("n", "missing integer");
  q.n = doc.at("n").get<int>();
  if (q.n <= 0) throw ParseError("n", "must be positive");
  if (!doc.contains("kappa") || !doc.at("kappa").is_number_integer())
    throw ParseError("kappa", "missing integer");
  q.kappa = doc.at("kappa").get<int>();
  if (!(q.kappa > 0 && q.kappa < q.n)) throw ParseError("kappa", "requires 0 < kappa < n");
  q.name = doc.value("name", "quadratic");

  q.c = detail::vector_from_json(doc, "c", q.n);
  Vec q_flat = detail::vector_from_json(doc, "Q");
  if (q_flat.size() != static_cast<Eigen::Index>(q.n) * q.n)
    throw ParseError("Q", "expected " + std::to_string(q.n) + "x" + std::to_string(q.n) +
                              " row-major entries");
  q.q = detail::matrix_from_json(doc, "Q", q.n, q.n);

  q.b_ineq = detail::vector_from_json(doc, "b_ineq");
  q.a_ineq = detail::matrix_from_json(doc, "A_ineq", static_cast<int>(q.b_ineq.size()), q.n);
  q.b_eq = detail::vector_from_json(doc, "b_eq");
  q.a_eq = detail::matrix_from_json(doc, "A_eq", static_cast<int>(q.b_eq.size()), q.n);
  return q;
}

inline void save(const ProblemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, "cannot open for writing");
  out << to_json(spec).dump(2) << "\n";
}

inline ProblemSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open for reading");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, std::string("invalid JSON: ") + e.what());
  }
  return problem_spec_from_json(doc);
}

inline Problem load(const std::string& path) { return make_problem(load_spec(path)); }

}  // namespace cardopt
