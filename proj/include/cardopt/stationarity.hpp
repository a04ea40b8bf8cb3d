#pragma once

#include <optional>

#include "cardopt/lp.hpp"
#include "cardopt/nnls.hpp"
#include "cardopt/reformulation.hpp"

namespace cardopt {

/// Multipliers (lambda, mu, gamma) of the stationarity equation
///
///   grad f(x) + jac_g(x)' lambda + jac_h(x)' mu + gamma = 0
///
/// with lambda >= 0 supported on the active inequalities and gamma supported
/// on the zero components of x (S-stationarity additionally forces
/// gamma_i = 0 on the biactive set I_00).
struct Multipliers {
  Vec lambda;  ///< m-vector, nonnegative, complementary to g
  Vec mu;      ///< p-vector
  Vec gamma;   ///< n-vector, zero off I_0
};

enum class StationarityKind { S, M, None };

enum class TriState { Yes, No, Unknown };

struct StationarityCertificate {
  StationarityKind kind = StationarityKind::None;
  std::optional<Multipliers> multipliers;
  double residual = 0.0;  ///< inf-norm of the stationarity equation residual
  TriState unique_multiplier = TriState::Unknown;
};

struct CqReport {
  bool cc_licq = false;
  double sigma_min = 0.0;  ///< smallest singular value of the stacked gradients
  bool cc_mfcq = false;
  std::optional<Multipliers> mfcq_witness;  ///< nontrivial coefficients when CC-MFCQ fails
};

/// Residual threshold for stationarity tests, scaled by the gradient size.
inline double stationarity_tolerance(const Tolerances& tols, const Vec& grad_f) {
  return tols.stat_tol_base * (1.0 + inf_norm(grad_f));
}

namespace detail {

/// Column layout of the stationarity system for a fixed support pattern.
struct StationaritySystem {
  Mat a;                      ///< n x k matrix of multiplier directions
  std::vector<bool> nonneg;   ///< per-column sign constraint
  IndexSet lambda_cols;       ///< inequality index per lambda column
  int mu_offset = 0;          ///< first mu column
  int p = 0;
  IndexSet gamma_cols;        ///< x index per gamma column
  Vec rhs;                    ///< -grad f(x)
};

inline StationaritySystem build_stationarity_system(const Problem& problem,
                                                    const EvalBundle& eval, const IndexSet& i_g,
                                                    const IndexSet& gamma_support) {
  StationaritySystem sys;
  const int n = problem.n;
  const int k = static_cast<int>(i_g.size()) + problem.p + static_cast<int>(gamma_support.size());
  sys.a.resize(n, k);
  sys.nonneg.assign(k, false);
  int col = 0;
  for (int i : i_g) {
    sys.a.col(col) = eval.jac_g.row(i).transpose();
    sys.nonneg[col] = true;
    sys.lambda_cols.push_back(i);
    ++col;
  }
  sys.mu_offset = col;
  sys.p = problem.p;
  for (int j = 0; j < problem.p; ++j) {
    sys.a.col(col) = eval.jac_h.row(j).transpose();
    ++col;
  }
  for (int i : gamma_support) {
    sys.a.col(col) = Vec::Unit(n, i);
    sys.gamma_cols.push_back(i);
    ++col;
  }
  sys.rhs = -eval.grad_f;
  return sys;
}

inline Multipliers expand_multipliers(const Problem& problem, const StationaritySystem& sys,
                                      const Vec& v) {
  Multipliers mult;
  mult.lambda = Vec::Zero(problem.m);
  mult.mu = Vec::Zero(problem.p);
  mult.gamma = Vec::Zero(problem.n);
  for (size_t k = 0; k < sys.lambda_cols.size(); ++k) mult.lambda(sys.lambda_cols[k]) = v(k);
  for (int j = 0; j < sys.p; ++j) mult.mu(j) = v(sys.mu_offset + j);
  for (size_t k = 0; k < sys.gamma_cols.size(); ++k)
    mult.gamma(sys.gamma_cols[k]) = v(sys.mu_offset + sys.p + k);
  return mult;
}

inline int numeric_rank(const Mat& a, double rank_tol_base) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& sv = svd.singularValues();
  double tol = rank_tol_base * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

inline StationarityCertificate certify_stationarity(const Problem& problem, const Vec& x,
                                                    const IndexSet& gamma_support,
                                                    StationarityKind target,
                                                    const Tolerances& tols) {
  EvalBundle eval = evaluate(problem, x, false);
  IndexSet i_g;
  for (int i = 0; i < problem.m; ++i)
    if (eval.g(i) >= -tols.act_tol) i_g.push_back(i);

  StationaritySystem sys = build_stationarity_system(problem, eval, i_g, gamma_support);
  SignedLeastSquaresResult ls = solve_signed_least_squares(sys.a, sys.rhs, sys.nonneg);

  StationarityCertificate cert;
  cert.residual = ls.residual_inf;
  double tol = stationarity_tolerance(tols, eval.grad_f);
  if (ls.residual_inf <= tol) {
    cert.kind = target;
    cert.multipliers = expand_multipliers(problem, sys, ls.v);
    bool full_rank = numeric_rank(sys.a, tols.rank_tol_base) == sys.a.cols();
    if (full_rank) {
      cert.unique_multiplier = TriState::Yes;
    } else {
      // A second multiplier exists iff the null space of the system admits a
      // direction that respects the pinned sign constraints.
      Mat ker = null_space_basis(sys.a, static_cast<int>(sys.a.cols()));
      IndexSet pinned;
      for (int j = 0; j < sys.a.cols(); ++j)
        if (sys.nonneg[j] && ls.v(j) <= 1e-12) pinned.push_back(j);
      if (pinned.empty() && ker.cols() > 0) {
        cert.unique_multiplier = TriState::No;
      } else if (ker.cols() > 0) {
        Mat pinned_rows(pinned.size(), ker.cols());
        for (size_t r = 0; r < pinned.size(); ++r) pinned_rows.row(r) = ker.row(pinned[r]);
        // Find c != 0 with pinned_rows c >= 0. Any such c scales so that one
        // coordinate equals +-1, so one pinned-coordinate LP per sign decides
        // it exactly; c is split into nonnegative parts with slack rows.
        const int kc = static_cast<int>(ker.cols());
        const int nr = static_cast<int>(pinned.size());
        bool found = false;
        for (int k = 0; k < kc && !found; ++k) {
          for (double sign : {1.0, -1.0}) {
            Mat m(nr + 1, 2 * kc + nr);
            m.topLeftCorner(nr, kc) = pinned_rows;
            m.block(0, kc, nr, kc) = -pinned_rows;
            m.block(0, 2 * kc, nr, nr) = -Mat::Identity(nr, nr);
            m.row(nr).setZero();
            m(nr, k) = 1.0;
            m(nr, kc + k) = -1.0;
            Vec b = Vec::Zero(nr + 1);
            b(nr) = sign;
            if (solve_lp_feasibility(m, b).has_value()) {
              found = true;
              break;
            }
          }
        }
        cert.unique_multiplier = found ? TriState::No : TriState::Unknown;
      } else {
        cert.unique_multiplier = TriState::Yes;
      }
    }
  }
  return cert;
}

}  // namespace detail

/// Tests M-stationarity of x: gamma may be nonzero on every zero component
/// of x. M-stationarity does not depend on the auxiliary variable y.
inline StationarityCertificate certify_m_stationary(const Problem& problem, const Vec& x,
                                                    const Tolerances& tols = {}) {
  if (!is_feasible_original(problem, x, tols))
    throw InfeasibleInput("certify_m_stationary: x is not feasible for the original problem");
  IndexSet i_0;
  for (int i = 0; i < problem.n; ++i)
    if (std::abs(x(i)) <= tols.zero_tol) i_0.push_back(i);
  return detail::certify_stationarity(problem, x, i_0, StationarityKind::M, tols);
}

/// Tests S-stationarity of a reformulation pair: compared with the M test,
/// gamma is additionally forced to zero on the biactive set I_00.
inline StationarityCertificate certify_s_stationary(const Problem& problem, const PrimalPair& pair,
                                                    const Tolerances& tols = {}) {
  if (!is_feasible_reformulation(problem, pair, tols))
    throw InfeasibleInput("certify_s_stationary: pair is not feasible for the reformulation");
  IndexSets sets = index_sets(problem, pair, tols);
  IndexSet gamma_support = sets.I_0plus;
  gamma_support.insert(gamma_support.end(), sets.I_01.begin(), sets.I_01.end());
  std::sort(gamma_support.begin(), gamma_support.end());
  return detail::certify_stationarity(problem, pair.x, gamma_support, StationarityKind::S, tols);
}

/// CC-LICQ: the rows grad g_i (i in I_g), grad h_i (all i), e_i (i in I_0)
/// are linearly independent.
inline std::pair<bool, double> check_cc_licq(const Problem& problem, const Vec& x,
                                             const Tolerances& tols = {}) {
  if (!is_feasible_original(problem, x, tols))
    throw InfeasibleInput("check_cc_licq: x is not feasible for the original problem");
  EvalBundle eval = evaluate(problem, x, false);
  std::vector<Vec> rows;
  for (int i = 0; i < problem.m; ++i)
    if (eval.g(i) >= -tols.act_tol) rows.push_back(eval.jac_g.row(i).transpose());
  for (int j = 0; j < problem.p; ++j) rows.push_back(eval.jac_h.row(j).transpose());
  for (int i = 0; i < problem.n; ++i)
    if (std::abs(x(i)) <= tols.zero_tol) rows.push_back(Vec::Unit(problem.n, i));

  if (rows.empty()) return {true, 0.0};
  Mat stacked(rows.size(), problem.n);
  for (size_t r = 0; r < rows.size(); ++r) stacked.row(r) = rows[r].transpose();
  if (static_cast<int>(rows.size()) > problem.n)
    return {false, smallest_singular_value(stacked)};
  Eigen::JacobiSVD<Mat> svd(stacked);
  double sigma_min = svd.singularValues().minCoeff();
  double sigma_max = svd.singularValues().maxCoeff();
  return {sigma_min >= tols.rank_tol_base * std::max(sigma_max, 1e-300), sigma_min};
}

/// CC-MFCQ: grad g_i (i in I_g) together with grad h_i, e_i (i in I_0) are
/// positively linearly independent. Decided exactly by an l1-normalized
/// homogeneous LP; when it fails the witness carries the nontrivial
/// coefficients.
inline std::pair<bool, std::optional<Multipliers>> check_cc_mfcq(const Problem& problem,
                                                                 const Vec& x,
                                                                 const Tolerances& tols = {}) {
  if (!is_feasible_original(problem, x, tols))
    throw InfeasibleInput("check_cc_mfcq: x is not feasible for the original problem");
  EvalBundle eval = evaluate(problem, x, false);
  IndexSet i_g, i_0;
  for (int i = 0; i < problem.m; ++i)
    if (eval.g(i) >= -tols.act_tol) i_g.push_back(i);
  for (int i = 0; i < problem.n; ++i)
    if (std::abs(x(i)) <= tols.zero_tol) i_0.push_back(i);

  Mat a_signed(problem.n, i_g.size());
  for (size_t k = 0; k < i_g.size(); ++k) a_signed.col(k) = eval.jac_g.row(i_g[k]).transpose();
  Mat a_free(problem.n, problem.p + i_0.size());
  for (int j = 0; j < problem.p; ++j) a_free.col(j) = eval.jac_h.row(j).transpose();
  for (size_t k = 0; k < i_0.size(); ++k)
    a_free.col(problem.p + k) = Vec::Unit(problem.n, i_0[k]);

  auto witness = positive_dependence_witness(a_signed, a_free);
  if (!witness) return {true, std::nullopt};

  Multipliers mult;
  mult.lambda = Vec::Zero(problem.m);
  mult.mu = Vec::Zero(problem.p);
  mult.gamma = Vec::Zero(problem.n);
  for (size_t k = 0; k < i_g.size(); ++k) mult.lambda(i_g[k]) = witness->first(k);
  for (int j = 0; j < problem.p; ++j) mult.mu(j) = witness->second(j);
  for (size_t k = 0; k < i_0.size(); ++k) mult.gamma(i_0[k]) = witness->second(problem.p + k);
  return {false, mult};
}

/// Combined constraint-qualification report. CC-CPLD is a neighborhood
/// property and is not decidable from a single point, so it is not part of
/// the report.
inline CqReport check_constraint_qualifications(const Problem& problem, const Vec& x,
                                                const Tolerances& tols = {}) {
  CqReport report;
  auto licq = check_cc_licq(problem, x, tols);
  report.cc_licq = licq.first;
  report.sigma_min = licq.second;
  auto mfcq = check_cc_mfcq(problem, x, tols);
  report.cc_mfcq = mfcq.first;
  report.mfcq_witness = mfcq.second;
  return report;
}

struct MultiplierVertexSet {
  std::vector<Multipliers> vertices;
  bool unbounded = false;  ///< the multiplier polyhedron has a nontrivial recession cone
  bool has_lines = false;  ///< free columns are dependent; no vertices exist
};

/// Enumerates the vertices of the multiplier polyhedron
///   { (lambda, mu, gamma) : stationarity equation, lambda >= 0, supports }
/// by basis enumeration over the sign-constrained columns. Under CC-LICQ the
/// result is a single vertex. Throws EnumerationLimit past max_bases.
inline MultiplierVertexSet multiplier_set_vertices(const Problem& problem, const PrimalPair& pair,
                                                   StationarityKind kind,
                                                   const Tolerances& tols = {},
                                                   int max_bases = 10000) {
  if (kind == StationarityKind::None)
    throw InfeasibleInput("multiplier_set_vertices: kind must be S or M");

  EvalBundle eval = evaluate(problem, pair.x, false);
  IndexSet i_g;
  for (int i = 0; i < problem.m; ++i)
    if (eval.g(i) >= -tols.act_tol) i_g.push_back(i);

  IndexSet gamma_support;
  if (kind == StationarityKind::M) {
    for (int i = 0; i < problem.n; ++i)
      if (std::abs(pair.x(i)) <= tols.zero_tol) gamma_support.push_back(i);
  } else {
    IndexSets sets = index_sets(problem, pair, tols);
    gamma_support = sets.I_0plus;
    gamma_support.insert(gamma_support.end(), sets.I_01.begin(), sets.I_01.end());
    std::sort(gamma_support.begin(), gamma_support.end());
  }

  detail::StationaritySystem sys =
      detail::build_stationarity_system(problem, eval, i_g, gamma_support);
  SignedLeastSquaresResult ls = solve_signed_least_squares(sys.a, sys.rhs, sys.nonneg);
  double tol = stationarity_tolerance(tols, eval.grad_f);
  if (ls.residual_inf > tol)
    throw InfeasibleInput("multiplier_set_vertices: point is not stationary of the given kind");

  const int cols = static_cast<int>(sys.a.cols());
  IndexSet free_cols, nonneg_cols;
  for (int j = 0; j < cols; ++j) (sys.nonneg[j] ? nonneg_cols : free_cols).push_back(j);

  MultiplierVertexSet out;

  // Lines come from dependent free columns; then the polyhedron has no
  // vertices at all.
  if (!free_cols.empty()) {
    Mat af(problem.n, free_cols.size());
    for (size_t k = 0; k < free_cols.size(); ++k) af.col(k) = sys.a.col(free_cols[k]);
    if (detail::numeric_rank(af, tols.rank_tol_base) < static_cast<int>(free_cols.size())) {
      out.has_lines = true;
      out.unbounded = true;
      return out;
    }
  }

  {
    Mat a_signed(problem.n, nonneg_cols.size());
    for (size_t k = 0; k < nonneg_cols.size(); ++k) a_signed.col(k) = sys.a.col(nonneg_cols[k]);
    Mat a_free(problem.n, free_cols.size());
    for (size_t k = 0; k < free_cols.size(); ++k) a_free.col(k) = sys.a.col(free_cols[k]);
    out.unbounded = positive_dependence_witness(a_signed, a_free).has_value();
  }

  const int nn = static_cast<int>(nonneg_cols.size());
  if (nn > 30 || (1LL << nn) > max_bases)
    throw EnumerationLimit("multiplier_set_vertices: basis count exceeds cap");

  const double accept_tol = std::max(tol, ls.residual_inf + 1e-9 * (1.0 + inf_norm(sys.rhs)));
  std::vector<Vec> raw_vertices;
  // Subsets ordered by size then lexicographically; a vertex is recovered from
  // the subset equal to its positive support.
  std::vector<IndexSet> subsets;
  subsets.push_back({});
  for (int size = 1; size <= nn; ++size) {
    std::vector<int> pick(size);
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == size) {
        subsets.emplace_back(pick.begin(), pick.end());
        return;
      }
      for (int i = start; i < nn; ++i) {
        pick[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    rec(0, 0);
  }

  for (const IndexSet& subset : subsets) {
    IndexSet basis = free_cols;
    for (int k : subset) basis.push_back(nonneg_cols[k]);
    if (static_cast<int>(basis.size()) > problem.n) continue;
    Mat b_mat(problem.n, basis.size());
    for (size_t k = 0; k < basis.size(); ++k) b_mat.col(k) = sys.a.col(basis[k]);
    if (basis.size() > 0 &&
        detail::numeric_rank(b_mat, tols.rank_tol_base) < static_cast<int>(basis.size()))
      continue;
    Vec vb = basis.empty() ? Vec(0) : Vec(b_mat.colPivHouseholderQr().solve(sys.rhs));
    Vec v = Vec::Zero(cols);
    for (size_t k = 0; k < basis.size(); ++k) v(basis[k]) = vb(k);
    if ((sys.a * v - sys.rhs).cwiseAbs().maxCoeff() > accept_tol) continue;
    bool sign_ok = true;
    for (int j : nonneg_cols)
      if (v(j) < -1e-9) sign_ok = false;
    if (!sign_ok) continue;
    for (int j : nonneg_cols) v(j) = std::max(0.0, v(j));
    bool duplicate = false;
    for (const Vec& known : raw_vertices) {
      if (inf_norm(known - v) <= 1e-8 * (1.0 + inf_norm(known))) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) raw_vertices.push_back(v);
  }

  for (const Vec& v : raw_vertices)
    out.vertices.push_back(detail::expand_multipliers(problem, sys, v));
  return out;
}

}  // namespace cardopt
