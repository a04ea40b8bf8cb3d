#pragma once

#include <limits>

#include "cardopt/errors.hpp"
#include "cardopt/linalg.hpp"

namespace cardopt {

struct SignedLeastSquaresResult {
  Vec v;             ///< minimizer
  Vec residual;      ///< A v - b at the minimizer
  double residual_inf = 0.0;
};

/// Minimizes |A v - b|_2 subject to v_i >= 0 for the flagged components;
/// the remaining components are free.
///
/// Active-set method in the Lawson-Hanson style: free variables stay in the
/// passive set permanently, sign-constrained variables enter at zero and move
/// between the sets. Subproblems are solved with column-pivoted QR, so
/// rank-deficient column families are handled.
inline SignedLeastSquaresResult solve_signed_least_squares(const Mat& a, const Vec& b,
                                                           const std::vector<bool>& nonneg) {
  const int rows = static_cast<int>(a.rows());
  const int cols = static_cast<int>(a.cols());
  if (static_cast<int>(nonneg.size()) != cols)
    throw SubproblemFailure("sign flags have wrong length");

  SignedLeastSquaresResult out;
  out.v = Vec::Zero(cols);
  if (cols == 0) {
    out.residual = -b;
    out.residual_inf = inf_norm(out.residual);
    return out;
  }

  std::vector<bool> passive(cols, false);
  for (int j = 0; j < cols; ++j) passive[j] = !nonneg[j];

  auto solve_passive = [&](Vec& u) {
    std::vector<int> idx;
    for (int j = 0; j < cols; ++j)
      if (passive[j]) idx.push_back(j);
    u = Vec::Zero(cols);
    if (idx.empty()) return;
    Mat ap(rows, idx.size());
    for (size_t k = 0; k < idx.size(); ++k) ap.col(k) = a.col(idx[k]);
    Vec up = ap.colPivHouseholderQr().solve(b);
    for (size_t k = 0; k < idx.size(); ++k) u(idx[k]) = up(k);
  };

  Vec v;
  solve_passive(v);
  // A fresh unconstrained solve can violate nothing: only free variables are
  // passive at this point.

  const double scale = std::max(1.0, inf_norm(a.transpose() * b));
  const double kkt_tol = 1e-11 * scale;
  const int max_iter = 60 * cols + 60;

  for (int iter = 0; iter < max_iter; ++iter) {
    Vec w = a.transpose() * (b - a * v);
    int enter = -1;
    double best = kkt_tol;
    for (int j = 0; j < cols; ++j) {
      if (!passive[j] && w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[enter] = true;

    for (int inner = 0; inner <= cols + 1; ++inner) {
      Vec u;
      solve_passive(u);
      bool feasible = true;
      for (int j = 0; j < cols; ++j) {
        if (passive[j] && nonneg[j] && u(j) <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        v = u;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (int j = 0; j < cols; ++j) {
        if (passive[j] && nonneg[j] && u(j) <= 0.0) {
          double denom = v(j) - u(j);
          if (denom > 0.0) alpha = std::min(alpha, v(j) / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      v += alpha * (u - v);
      for (int j = 0; j < cols; ++j) {
        if (passive[j] && nonneg[j] && v(j) <= kkt_tol) {
          passive[j] = false;
          v(j) = 0.0;
        }
      }
      if (inner == cols + 1)
        throw SubproblemFailure("sign-constrained least squares: inner loop did not settle");
    }
  }

  for (int j = 0; j < cols; ++j)
    if (nonneg[j] && v(j) < 0.0) v(j) = 0.0;
  out.v = v;
  out.residual = a * v - b;
  out.residual_inf = inf_norm(out.residual);
  return out;
}

}  // namespace cardopt
