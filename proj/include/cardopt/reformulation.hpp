#pragma once

#include <cstdlib>

#include "cardopt/problem.hpp"

namespace cardopt {

/// A point (x, y) of the continuous reformulation
///
///   min f(x)  s.t.  g(x) <= 0, h(x) = 0,
///                   0 <= y <= e,  e'y >= n - kappa,  x o y = 0,
///
/// where y counts the zero components of x.
struct PrimalPair {
  Vec x;
  Vec y;
};

/// Numeric thresholds for feasibility and activity decisions. zero_tol sits
/// below typical solver accuracy, act_tol above it.
struct Tolerances {
  double feas_tol = 1e-8;  ///< constraint violation
  double act_tol = 1e-6;   ///< activity detection
  double zero_tol = 1e-8;  ///< treating x_i as zero

  /// Base factors for derived tolerances: the stationarity threshold is
  /// stat_tol_base*(1+|grad f|_inf), the rank threshold rank_tol_base*sigma_max.
  double stat_tol_base = 1e-6;
  double rank_tol_base = 1e-8;
};

/// Active and zero index sets at a reformulation point. I_pm0, I_00, I_0plus
/// and I_01 partition {0..n-1}; I_0 = I_00 + I_0plus + I_01.
struct IndexSets {
  IndexSet I_g;      ///< active inequality constraints
  IndexSet I_0;      ///< zero components of x
  IndexSet I_pm0;    ///< x_i != 0, y_i = 0
  IndexSet I_00;     ///< x_i = 0, y_i = 0 (biactive)
  IndexSet I_0plus;  ///< x_i = 0, y_i in (0, 1)
  IndexSet I_01;     ///< x_i = 0, y_i = 1
  bool card_active = false;  ///< e'y = n - kappa within tolerance
};

inline int support_size(const Vec& x, double zero_tol) {
  int count = 0;
  for (int i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > zero_tol) ++count;
  return count;
}

inline IndexSet support(const Vec& x, double zero_tol) {
  IndexSet s;
  for (int i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > zero_tol) s.push_back(i);
  return s;
}

/// Classifies a reformulation point into its index sets. Throws
/// ClassificationError when some y_i lies outside [-act_tol, 1+act_tol].
inline IndexSets index_sets(const Problem& problem, const PrimalPair& pair,
                            const Tolerances& tols = {}) {
  if (pair.x.size() != problem.n || pair.y.size() != problem.n)
    throw EvaluationError("pair has wrong dimensions");

  IndexSets sets;
  EvalBundle eval = evaluate(problem, pair.x, false);
  for (int i = 0; i < problem.m; ++i)
    if (eval.g(i) >= -tols.act_tol) sets.I_g.push_back(i);

  for (int i = 0; i < problem.n; ++i) {
    double yi = pair.y(i);
    if (yi < -tols.act_tol || yi > 1.0 + tols.act_tol)
      throw ClassificationError("y_" + std::to_string(i) + " outside [0, 1]");
    bool x_zero = std::abs(pair.x(i)) <= tols.zero_tol;
    if (!x_zero) {
      sets.I_pm0.push_back(i);
      continue;
    }
    sets.I_0.push_back(i);
    if (std::abs(yi) <= tols.act_tol)
      sets.I_00.push_back(i);
    else if (std::abs(yi - 1.0) <= tols.act_tol)
      sets.I_01.push_back(i);
    else
      sets.I_0plus.push_back(i);
  }
  sets.card_active =
      std::abs(pair.y.sum() - static_cast<double>(problem.n - problem.kappa)) <= tols.act_tol;
  return sets;
}

/// Feasibility for the original problem: g(x) <= 0, h(x) = 0, ||x||_0 <= kappa.
inline bool is_feasible_original(const Problem& problem, const Vec& x,
                                 const Tolerances& tols = {}) {
  EvalBundle eval = evaluate(problem, x, false);
  if (max_or_zero(eval.g) > tols.feas_tol) return false;
  if (inf_norm(eval.h) > tols.feas_tol) return false;
  return support_size(x, tols.zero_tol) <= problem.kappa;
}

/// Feasibility for the continuous reformulation.
inline bool is_feasible_reformulation(const Problem& problem, const PrimalPair& pair,
                                      const Tolerances& tols = {}) {
  if (pair.x.size() != problem.n || pair.y.size() != problem.n) return false;
  EvalBundle eval = evaluate(problem, pair.x, false);
  if (max_or_zero(eval.g) > tols.feas_tol) return false;
  if (inf_norm(eval.h) > tols.feas_tol) return false;
  for (int i = 0; i < problem.n; ++i) {
    if (pair.y(i) < -tols.feas_tol || pair.y(i) > 1.0 + tols.feas_tol) return false;
    if (std::abs(pair.x(i) * pair.y(i)) > tols.feas_tol) return false;
  }
  return pair.y.sum() >= static_cast<double>(problem.n - problem.kappa) - tols.feas_tol;
}

/// Completes x to a reformulation point with the all-ones completion on the
/// zero set: y_i = 0 on the support of x and y_i = 1 elsewhere. This choice
/// maximizes e'y and is feasible whenever ||x||_0 <= kappa.
inline Vec complete_y(const Problem& problem, const Vec& x, const Tolerances& tols = {}) {
  if (!is_feasible_original(problem, x, tols))
    throw InfeasibleInput("x is not feasible for the original problem");
  Vec y(problem.n);
  for (int i = 0; i < problem.n; ++i) y(i) = std::abs(x(i)) > tols.zero_tol ? 0.0 : 1.0;
  return y;
}

}  // namespace cardopt
