#pragma once

#include <optional>

#include "cardopt/errors.hpp"
#include "cardopt/linalg.hpp"

namespace cardopt {

/// Phase-1 simplex feasibility test for {w >= 0 : M w = b}.
///
/// Minimizes the sum of artificial variables with Bland's rule, which
/// guarantees termination. Returns a feasible w when one exists. Rows with
/// negative right-hand side are flipped on entry.
inline std::optional<Vec> solve_lp_feasibility(Mat m, Vec b, double tol = 1e-10) {
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  if (rows == 0) return Vec::Zero(cols);

  for (int i = 0; i < rows; ++i) {
    if (b(i) < 0.0) {
      b(i) = -b(i);
      m.row(i) = -m.row(i);
    }
  }

  // Tableau [M | I | b]; artificial variables start basic.
  Mat tab(rows, cols + rows + 1);
  tab.leftCols(cols) = m;
  tab.middleCols(cols, rows) = Mat::Identity(rows, rows);
  tab.col(cols + rows) = b;

  std::vector<int> basis(rows);
  for (int i = 0; i < rows; ++i) basis[i] = cols + i;

  // Phase-1 objective row: reduced costs of min sum(artificials).
  Eigen::RowVectorXd obj = Eigen::RowVectorXd::Zero(cols + rows + 1);
  for (int i = 0; i < rows; ++i) obj -= tab.row(i);

  const int max_pivots = 50 * (cols + rows + 5);
  for (int iter = 0; iter < max_pivots; ++iter) {
    // Bland's rule: smallest improving column.
    int enter = -1;
    for (int j = 0; j < cols + rows; ++j) {
      if (obj(j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (tab(i, enter) > tol) {
        double ratio = tab(i, cols + rows) / tab(i, enter);
        if (leave < 0 || ratio < best_ratio - tol ||
            (ratio < best_ratio + tol && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) throw SubproblemFailure("phase-1 LP unbounded; input is inconsistent");

    double pivot = tab(leave, enter);
    tab.row(leave) /= pivot;
    for (int i = 0; i < rows; ++i) {
      if (i != leave && std::abs(tab(i, enter)) > 0.0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    }
    obj -= obj(enter) * tab.row(leave);
    basis[leave] = enter;
  }

  double infeasibility = 0.0;
  for (int i = 0; i < rows; ++i)
    if (basis[i] >= cols) infeasibility += tab(i, cols + rows);
  if (infeasibility > 1e3 * tol * (1.0 + b.cwiseAbs().maxCoeff())) return std::nullopt;

  Vec w = Vec::Zero(cols);
  for (int i = 0; i < rows; ++i)
    if (basis[i] < cols) w(basis[i]) = std::max(0.0, tab(i, cols + rows));
  return w;
}

/// Decides whether columns of A admit a nontrivial combination
/// A_s s + A_f u = 0 with s >= 0, (s, u) != 0, i.e. whether the sign-split
/// column family is positively linearly dependent. A_s holds the
/// sign-constrained columns, A_f the free ones.
///
/// A dependence either uses no signed mass (then the free family must be
/// linearly dependent, decided by a rank test) or can be normalized to
/// sum(s) = 1 (decided by one LP whose only feasible points are genuine
/// witnesses). On success returns (s, u) normalized to |s|_1 + |u|_1 = 1.
inline std::optional<std::pair<Vec, Vec>> positive_dependence_witness(const Mat& a_signed,
                                                                      const Mat& a_free) {
  const int dim = a_signed.cols() > 0 ? static_cast<int>(a_signed.rows())
                                      : static_cast<int>(a_free.rows());
  const int ns = static_cast<int>(a_signed.cols());
  const int nf = static_cast<int>(a_free.cols());
  if (ns + nf == 0) return std::nullopt;

  auto normalized = [&](Vec s, Vec u) {
    double scale = s.cwiseAbs().sum() + u.cwiseAbs().sum();
    s /= scale;
    u /= scale;
    return std::make_pair(s, u);
  };

  // Dependence within the free family alone.
  if (nf > 0) {
    Eigen::JacobiSVD<Mat> svd(a_free, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    double tol = 1e-12 * std::max(1.0, smax) * std::max(dim, nf);
    if (nf > dim || sv.minCoeff() <= tol) {
      Vec u = svd.matrixV().col(nf - 1);
      return normalized(Vec::Zero(ns), u);
    }
  }
  if (ns == 0) return std::nullopt;

  // Dependence with signed mass, normalized to sum(s) = 1. Free coefficients
  // are split into nonnegative parts; any residual paired mass cancels in u
  // and cannot fake feasibility because the signed mass row pins s.
  Mat m(dim + 1, ns + 2 * nf);
  m.topLeftCorner(dim, ns) = a_signed;
  if (nf > 0) {
    m.block(0, ns, dim, nf) = a_free;
    m.block(0, ns + nf, dim, nf) = -a_free;
  }
  m.row(dim).setZero();
  m.row(dim).head(ns).setOnes();
  Vec b = Vec::Zero(dim + 1);
  b(dim) = 1.0;

  auto w = solve_lp_feasibility(m, b);
  if (!w) return std::nullopt;
  Vec s = w->head(ns);
  Vec u = w->segment(ns, nf) - w->tail(nf);
  return normalized(s, u);
}

}  // namespace cardopt
