#pragma once

#include <optional>
#include <string>

#include "cardopt/stationarity.hpp"

namespace cardopt {

/// Hessian of the Lagrangian in the x variable:
///   H = hess f + sum_i lambda_i hess g_i + sum_i mu_i hess h_i.
/// Neither gamma nor y enters H.
struct LagrangianHessian {
  Mat h;
};

inline LagrangianHessian lagrangian_hessian(const Problem& problem, const Vec& x,
                                            const Multipliers& mult) {
  if (mult.lambda.size() != problem.m || mult.mu.size() != problem.p)
    throw EvaluationError("lagrangian_hessian: multipliers have wrong dimensions");
  EvalBundle eval = evaluate(problem, x, true);
  Mat h = eval.hess_f;
  for (int i = 0; i < problem.m; ++i) h += mult.lambda(i) * eval.hess_g[i];
  for (int i = 0; i < problem.p; ++i) h += mult.mu(i) * eval.hess_h[i];
  return {symmetrized(h)};
}

/// Membership test for the linearisation cone of the reformulation at a
/// feasible pair, applied to a direction (d_x, d_y). Every condition is
/// checked within act_tol; the counter row e'd_y >= 0 applies only when the
/// cardinality constraint is active.
inline bool linearization_cone_member(const Problem& problem, const PrimalPair& pair,
                                      const Vec& d_x, const Vec& d_y,
                                      const Tolerances& tols = {}) {
  if (d_x.size() != problem.n || d_y.size() != problem.n)
    throw EvaluationError("linearization_cone_member: direction has wrong length");
  EvalBundle eval = evaluate(problem, pair.x, false);
  IndexSets sets = index_sets(problem, pair, tols);
  const double tol = tols.act_tol;

  for (int i : sets.I_g)
    if (eval.jac_g.row(i).dot(d_x) > tol) return false;
  for (int i = 0; i < problem.p; ++i)
    if (std::abs(eval.jac_h.row(i).dot(d_x)) > tol) return false;
  if (sets.card_active && d_y.sum() < -tol) return false;
  for (int i : sets.I_pm0)
    if (std::abs(d_y(i)) > tol) return false;
  for (int i : sets.I_00)
    if (d_y(i) < -tol) return false;
  for (int i : sets.I_01)
    if (d_y(i) > tol) return false;
  for (int i : sets.I_01)
    if (std::abs(d_x(i)) > tol) return false;
  for (int i : sets.I_0plus)
    if (std::abs(d_x(i)) > tol) return false;
  for (int i : sets.I_00)
    if (std::abs(d_x(i) * d_y(i)) > tol) return false;
  return true;
}

/// One polyhedral branch of the x-projection of the CC-critical cone:
///   { d : eq_rows d = 0, ineq_rows d <= 0 }.
struct ConeBranch {
  IndexSet zero_set;  ///< zero components forced beyond the base rows
  Mat eq_rows;
  Mat ineq_rows;
  std::vector<std::string> eq_labels;
  std::vector<std::string> ineq_labels;
};

enum class ConeMode {
  Pair,   ///< branches over subsets of the biactive set I_00 at a fixed pair
  XUnion  ///< branches over zero patterns in I_0, the union over all feasible y
};

namespace detail {

struct RowSet {
  std::vector<std::pair<std::string, Vec>> rows;

  void add(const std::string& label, const Vec& row) { rows.emplace_back(label, row); }
};

inline Mat stack_rows(const std::vector<std::pair<std::string, Vec>>& rows, int n) {
  Mat out(rows.size(), n);
  for (size_t r = 0; r < rows.size(); ++r) out.row(r) = rows[r].second.transpose();
  return out;
}

inline std::vector<std::string> labels_of(const std::vector<std::pair<std::string, Vec>>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& [label, row] : rows) out.push_back(label);
  return out;
}

inline std::vector<IndexSet> subsets_up_to(const IndexSet& ground, long cap,
                                           const char* cap_message) {
  if (ground.size() >= 63 || (1LL << ground.size()) > cap) throw BranchExplosion(cap_message);
  std::vector<IndexSet> out;
  out.push_back({});
  std::vector<int> pick;
  std::function<void(size_t, int)> rec = [&](size_t start, int remaining) {
    if (remaining == 0) {
      out.push_back(IndexSet(pick.begin(), pick.end()));
      return;
    }
    for (size_t i = start; i + remaining <= ground.size(); ++i) {
      pick.push_back(ground[i]);
      rec(i + 1, remaining - 1);
      pick.pop_back();
    }
  };
  for (int size = 1; size <= static_cast<int>(ground.size()); ++size) rec(0, size);
  return out;
}

inline std::vector<IndexSet> subsets_of_size(const IndexSet& ground, int size, long cap,
                                             const char* cap_message) {
  double count = 1.0;
  for (int s = 1; s <= size; ++s) count *= static_cast<double>(ground.size() - s + 1) / s;
  if (count > static_cast<double>(cap)) throw BranchExplosion(cap_message);
  std::vector<IndexSet> out;
  std::vector<int> pick;
  std::function<void(size_t, int)> rec = [&](size_t start, int remaining) {
    if (remaining == 0) {
      out.push_back(IndexSet(pick.begin(), pick.end()));
      return;
    }
    for (size_t i = start; i + remaining <= ground.size(); ++i) {
      pick.push_back(ground[i]);
      rec(i + 1, remaining - 1);
      pick.pop_back();
    }
  };
  rec(0, size);
  return out;
}

}  // namespace detail

/// Enumerates the polyhedral branches whose union is the x-projection of the
/// CC-critical cone (pair mode) or the critical cone of the original problem
/// over all feasible completions (x-union mode).
///
/// The descent condition grad f' d_x <= 0 is rewritten through the
/// stationarity multipliers as the equalities grad g_i' d_x = 0 on I_g+
/// whenever gamma vanishes on the branch's free zero components (always the
/// case at S-stationary points in pair mode); otherwise the raw gradient row
/// is kept as an inequality. Branches are deduplicated by row-label sets.
inline std::vector<ConeBranch> critical_cone_branches(const Problem& problem,
                                                      const PrimalPair& pair,
                                                      const Multipliers& mult, ConeMode mode,
                                                      const Tolerances& tols = {},
                                                      long branch_cap = 1L << 20) {
  EvalBundle eval = evaluate(problem, pair.x, false);
  IndexSets sets = index_sets(problem, pair, tols);

  const double lambda_tol = tols.zero_tol * (1.0 + inf_norm(mult.lambda));
  IndexSet i_g_plus, i_g_zero;
  for (int i : sets.I_g) (mult.lambda(i) > lambda_tol ? i_g_plus : i_g_zero).push_back(i);

  // Zero-pattern families and the base forced-zero components per mode.
  IndexSet base_zero;
  std::vector<IndexSet> patterns;
  IndexSet free_zero_ground;  // components of I_0 not already forced by base rows
  if (mode == ConeMode::Pair) {
    base_zero = sets.I_01;
    base_zero.insert(base_zero.end(), sets.I_0plus.begin(), sets.I_0plus.end());
    std::sort(base_zero.begin(), base_zero.end());
    free_zero_ground = sets.I_00;
    patterns = detail::subsets_up_to(free_zero_ground, branch_cap,
                                     "critical_cone_branches: 2^|I_00| exceeds cap");
  } else {
    free_zero_ground = sets.I_0;
    int required = problem.n - problem.kappa;
    patterns = detail::subsets_of_size(free_zero_ground, required, branch_cap,
                                       "critical_cone_branches: zero-pattern count exceeds cap");
  }

  std::vector<ConeBranch> branches;
  std::vector<std::vector<std::string>> seen_label_sets;
  for (const IndexSet& pattern : patterns) {
    detail::RowSet eq, ineq;
    for (int i = 0; i < problem.p; ++i)
      eq.add("h" + std::to_string(i), eval.jac_h.row(i).transpose());
    IndexSet forced = base_zero;
    forced.insert(forced.end(), pattern.begin(), pattern.end());
    std::sort(forced.begin(), forced.end());
    forced.erase(std::unique(forced.begin(), forced.end()), forced.end());
    for (int i : forced) eq.add("e" + std::to_string(i), Vec::Unit(problem.n, i));

    // gamma components on zero coordinates the branch leaves free.
    bool multiplier_description_applies = true;
    for (int i : free_zero_ground) {
      if (!contains(pattern, i) && std::abs(mult.gamma(i)) > tols.zero_tol) {
        multiplier_description_applies = false;
        break;
      }
    }
    if (multiplier_description_applies) {
      for (int i : i_g_plus) eq.add("g+" + std::to_string(i), eval.jac_g.row(i).transpose());
      for (int i : i_g_zero) ineq.add("g0" + std::to_string(i), eval.jac_g.row(i).transpose());
    } else {
      for (int i : sets.I_g) ineq.add("g" + std::to_string(i), eval.jac_g.row(i).transpose());
      ineq.add("df", eval.grad_f);
    }

    ConeBranch branch;
    branch.zero_set = pattern;
    branch.eq_rows = detail::stack_rows(eq.rows, problem.n);
    branch.ineq_rows = detail::stack_rows(ineq.rows, problem.n);
    branch.eq_labels = detail::labels_of(eq.rows);
    branch.ineq_labels = detail::labels_of(ineq.rows);

    std::vector<std::string> key = branch.eq_labels;
    key.push_back("|");
    key.insert(key.end(), branch.ineq_labels.begin(), branch.ineq_labels.end());
    std::sort(key.begin(), key.end());
    bool duplicate = false;
    for (const auto& known : seen_label_sets)
      if (known == key) duplicate = true;
    if (duplicate) continue;
    seen_label_sets.push_back(key);
    branches.push_back(std::move(branch));
  }
  return branches;
}

enum class SecondOrderStatus { Certified, Falsified, Inconclusive };
enum class MultiplierMode { Exists, ForAll };

struct BranchReport {
  IndexSet zero_set;
  int subspace_dim = 0;        ///< dimension of the branch's equality null space
  double min_eigenvalue = 0.0; ///< of the reduced Hessian (best multiplier in exists mode)
  bool passed = false;
};

struct SecondOrderVerdict {
  SecondOrderStatus status = SecondOrderStatus::Inconclusive;
  std::optional<Vec> witness;    ///< direction d_x with a quantified violation
  double witness_value = 0.0;    ///< d' H d at the witness
  std::vector<BranchReport> branch_reports;
  MultiplierMode multiplier_mode = MultiplierMode::Exists;
  bool multiplier_set_unbounded = false;
  bool multiplier_set_has_lines = false;
};

struct SecondOrderOptions {
  int samples_per_branch = 1000;
  std::uint64_t seed = 0x5EED;
  double tol_pd_base = 1e-8;  ///< scaled by (1 + |H|_inf)
  long branch_cap = 1L << 20;
  int max_multiplier_bases = 10000;
  ConeMode cone_mode = ConeMode::Pair;
};

namespace detail {

inline bool direction_in_branch(const ConeBranch& branch, const Vec& d) {
  for (int r = 0; r < branch.ineq_rows.rows(); ++r) {
    double row_scale = 1.0 + branch.ineq_rows.row(r).cwiseAbs().maxCoeff();
    if (branch.ineq_rows.row(r).dot(d) > 1e-10 * row_scale) return false;
  }
  return true;
}

/// Searches a branch for a direction with quadratic form below the cutoff,
/// first along eigenvector directions of the reduced Hessian, then by seeded
/// Gaussian sampling inside the equality null space. Directions are
/// normalized to unit length before evaluating the form.
inline std::optional<std::pair<Vec, double>> find_branch_violation(
    const ConeBranch& branch, const Mat& basis, const Mat& h, double cutoff, int samples,
    SplitMix64& rng) {
  const int dim = static_cast<int>(basis.cols());
  if (dim == 0) return std::nullopt;
  Mat reduced = symmetrized(basis.transpose() * h * basis);
  Eigen::SelfAdjointEigenSolver<Mat> eig(reduced);

  auto try_direction = [&](Vec d) -> std::optional<std::pair<Vec, double>> {
    double norm = d.norm();
    if (norm <= 1e-14) return std::nullopt;
    d /= norm;
    for (const Vec& candidate : {d, Vec(-d)}) {
      if (!direction_in_branch(branch, candidate)) continue;
      double value = candidate.dot(h * candidate);
      if (value <= cutoff) return std::make_pair(candidate, value);
    }
    return std::nullopt;
  };

  for (int k = 0; k < dim; ++k) {
    if (eig.eigenvalues()(k) > cutoff) continue;
    if (auto hit = try_direction(basis * eig.eigenvectors().col(k))) return hit;
  }
  for (int s = 0; s < samples; ++s) {
    if (auto hit = try_direction(basis * rng.gaussian_vector(dim))) return hit;
  }
  return std::nullopt;
}

}  // namespace detail

/// Second-order necessary condition at an S-stationary pair: the Lagrangian
/// Hessian must be positive semidefinite over every branch of the projected
/// critical cone. Certification uses the branch's equality null space (a
/// superset of the branch cone, hence sufficient); falsification requires a
/// concrete in-cone witness with d' H d < -tol_psd.
inline SecondOrderVerdict check_sonc(const Problem& problem, const PrimalPair& pair,
                                     const Multipliers& mult,
                                     const SecondOrderOptions& opts = {},
                                     const Tolerances& tols = {}) {
  Mat h = lagrangian_hessian(problem, pair.x, mult).h;
  std::vector<ConeBranch> branches =
      critical_cone_branches(problem, pair, mult, opts.cone_mode, tols, opts.branch_cap);
  const double tol_psd = opts.tol_pd_base * (1.0 + h.cwiseAbs().maxCoeff());

  SecondOrderVerdict verdict;
  SplitMix64 rng(opts.seed);
  bool all_psd = true;
  for (const ConeBranch& branch : branches) {
    Mat basis = null_space_basis(branch.eq_rows, problem.n);
    BranchReport report;
    report.zero_set = branch.zero_set;
    report.subspace_dim = static_cast<int>(basis.cols());
    if (basis.cols() == 0) {
      report.passed = true;
      verdict.branch_reports.push_back(report);
      continue;
    }
    Mat reduced = symmetrized(basis.transpose() * h * basis);
    Eigen::SelfAdjointEigenSolver<Mat> eig(reduced);
    report.min_eigenvalue = eig.eigenvalues().minCoeff();
    report.passed = report.min_eigenvalue >= -tol_psd;
    verdict.branch_reports.push_back(report);
    if (report.passed) continue;

    all_psd = false;
    auto hit = detail::find_branch_violation(branch, basis, h, -tol_psd,
                                             opts.samples_per_branch, rng);
    if (hit && !verdict.witness) {
      verdict.witness = hit->first;
      verdict.witness_value = hit->second;
    }
  }
  verdict.status = verdict.witness ? SecondOrderStatus::Falsified
                  : all_psd        ? SecondOrderStatus::Certified
                                   : SecondOrderStatus::Inconclusive;
  return verdict;
}

/// CC-SOSC check. Per branch and multiplier vertex the reduced Hessian
/// B' H B over the branch's equality null space must be positive definite;
/// exists mode asks for one passing vertex per branch, forall mode for all
/// of them. Falsification samples branch directions whose quadratic form is
/// nonpositive for every vertex (exists) or some vertex (forall); since the
/// form is affine in the multiplier, vertex extremes are exact for bounded
/// multiplier sets. Branches with only the zero direction pass vacuously.
inline SecondOrderVerdict check_cc_sosc(const Problem& problem, const PrimalPair& pair,
                                        MultiplierMode mode,
                                        const SecondOrderOptions& opts = {},
                                        const Tolerances& tols = {}) {
  StationarityCertificate cert = mode == MultiplierMode::Exists
                                     ? certify_s_stationary(problem, pair, tols)
                                     : certify_m_stationary(problem, pair.x, tols);
  if (cert.kind == StationarityKind::None)
    throw InfeasibleInput("check_cc_sosc: point is not stationary of the requested kind");

  MultiplierVertexSet vertex_set = multiplier_set_vertices(
      problem, pair, mode == MultiplierMode::Exists ? StationarityKind::S : StationarityKind::M,
      tols, opts.max_multiplier_bases);

  SecondOrderVerdict verdict;
  verdict.multiplier_mode = mode;
  verdict.multiplier_set_unbounded = vertex_set.unbounded;
  verdict.multiplier_set_has_lines = vertex_set.has_lines;
  if (vertex_set.vertices.empty()) return verdict;  // no vertex structure to reason with

  std::vector<Mat> hessians;
  hessians.reserve(vertex_set.vertices.size());
  for (const Multipliers& vertex : vertex_set.vertices)
    hessians.push_back(lagrangian_hessian(problem, pair.x, vertex).h);

  double h_scale = 0.0;
  for (const Mat& h : hessians) h_scale = std::max(h_scale, h.cwiseAbs().maxCoeff());
  const double tol_pd = opts.tol_pd_base * (1.0 + h_scale);

  std::vector<ConeBranch> branches = critical_cone_branches(
      problem, pair, *cert.multipliers, opts.cone_mode, tols, opts.branch_cap);

  // In forall mode an unbounded multiplier set cannot be exhausted by its
  // vertices, so certification is capped at inconclusive.
  const bool can_certify = mode == MultiplierMode::Exists || !vertex_set.unbounded;

  SplitMix64 rng(opts.seed);
  bool all_passed = true;
  for (const ConeBranch& branch : branches) {
    Mat basis = null_space_basis(branch.eq_rows, problem.n);
    BranchReport report;
    report.zero_set = branch.zero_set;
    report.subspace_dim = static_cast<int>(basis.cols());
    if (basis.cols() == 0) {
      report.passed = true;
      verdict.branch_reports.push_back(report);
      continue;
    }

    double branch_eig = mode == MultiplierMode::Exists
                            ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
    for (const Mat& h : hessians) {
      Mat reduced = symmetrized(basis.transpose() * h * basis);
      Eigen::SelfAdjointEigenSolver<Mat> eig(reduced);
      double min_eig = eig.eigenvalues().minCoeff();
      branch_eig = mode == MultiplierMode::Exists ? std::max(branch_eig, min_eig)
                                                  : std::min(branch_eig, min_eig);
    }
    report.min_eigenvalue = branch_eig;
    report.passed = branch_eig >= tol_pd;
    verdict.branch_reports.push_back(report);
    if (report.passed) continue;
    all_passed = false;

    // Falsification: a direction whose form is <= 0 for all vertices (exists
    // mode) or for at least one vertex (forall mode).
    const double cutoff = 1e-12 * (1.0 + h_scale);
    const int dim = static_cast<int>(basis.cols());
    auto try_direction = [&](Vec d) -> bool {
      double norm = d.norm();
      if (norm <= 1e-14) return false;
      d /= norm;
      for (const Vec& candidate : {d, Vec(-d)}) {
        if (!detail::direction_in_branch(branch, candidate)) continue;
        bool falsifies = mode == MultiplierMode::Exists;
        double worst = std::numeric_limits<double>::infinity();
        for (const Mat& h : hessians) {
          double value = candidate.dot(h * candidate);
          worst = std::min(worst, value);
          if (mode == MultiplierMode::Exists && value > cutoff) {
            falsifies = false;
            break;
          }
          if (mode == MultiplierMode::ForAll && value <= cutoff) falsifies = true;
        }
        if (falsifies && !verdict.witness) {
          verdict.witness = candidate;
          verdict.witness_value = worst;
          return true;
        }
      }
      return false;
    };

    bool found = false;
    for (const Mat& h : hessians) {
      Mat reduced = symmetrized(basis.transpose() * h * basis);
      Eigen::SelfAdjointEigenSolver<Mat> eig(reduced);
      for (int k = 0; k < dim && !found; ++k) {
        if (eig.eigenvalues()(k) > cutoff) continue;
        found = try_direction(basis * eig.eigenvectors().col(k));
      }
      if (found) break;
    }
    for (int s = 0; s < opts.samples_per_branch && !found; ++s)
      found = try_direction(basis * rng.gaussian_vector(dim));
  }

  verdict.status = verdict.witness                ? SecondOrderStatus::Falsified
                   : (all_passed && can_certify)  ? SecondOrderStatus::Certified
                                                  : SecondOrderStatus::Inconclusive;
  return verdict;
}

}  // namespace cardopt
