#pragma once

#include "cardopt/nlp.hpp"
#include "cardopt/stationarity.hpp"

namespace cardopt {

/// Schedule and stopping rule of the regularization loop t -> 0.
struct PathOptions {
  double t0 = 1.0;            ///< initial regularization parameter
  double sigma = 0.1;         ///< reduction factor in (0, 1)
  double t_min = 1e-10;       ///< smallest parameter before the path stalls
  double comp_tol = 1e-8;     ///< target max_i |x_i y_i|
  double rounding_tol = 1e-6; ///< threshold for projecting tiny x_i to exact zero
  std::uint64_t seed = 0;     ///< seed of the perturbed-start retry
};

struct PathEntry {
  double t = 0.0;
  Vec x;
  Vec y;
  double kkt_residual = 0.0;
  double comp_violation = 0.0;
  NlpStatus solver_status = NlpStatus::IterationLimit;
};

struct RegularizationPath {
  std::vector<PathEntry> entries;
  bool converged = false;  ///< false means the path stalled at t_min
  PrimalPair final_point;  ///< rounded and recompleted final iterate
  double final_f = 0.0;
  StationarityCertificate final_certificate;  ///< S-stationarity at the final point
  StationarityCertificate m_certificate;      ///< M-stationarity at the final point
  CqReport cq_report;
};

/// Assembles the regularized program NLP(t) over z = (x, y):
///   min f(x)  s.t.  g(x) <= 0, h(x) = 0, -te <= x o y <= te,
///                   n - kappa - e'y <= 0,  0 <= y <= 1.
inline NlpSpec build_nlpt(const Problem& problem, double t) {
  validate(problem);
  if (t < 0.0) throw EvaluationError("build_nlpt: t must be nonnegative");
  const int n = problem.n;
  NlpSpec spec;
  spec.dim = 2 * n;

  spec.objective = [&problem, n](const Vec& z) { return problem.f(z.head(n)); };
  spec.gradient = [&problem, n](const Vec& z) -> Vec {
    Vec grad = Vec::Zero(2 * n);
    Vec x = z.head(n);
    grad.head(n) = problem.grad_f ? problem.grad_f(x)
                                  : detail::central_gradient(problem.f, x, detail::kDefaultFdStep);
    return grad;
  };

  // Rows: g(x), x o y - te, -x o y - te, (n - kappa) - e'y.
  spec.n_ineq = problem.m + 2 * n + 1;
  spec.c_ineq = [&problem, n, t](const Vec& z) -> Vec {
    Vec x = z.head(n);
    Vec y = z.tail(n);
    Vec c(problem.m + 2 * n + 1);
    if (problem.m > 0) c.head(problem.m) = problem.g(x);
    Vec bilinear = x.cwiseProduct(y);
    c.segment(problem.m, n) = bilinear.array() - t;
    c.segment(problem.m + n, n) = -bilinear.array() - t;
    c(problem.m + 2 * n) = static_cast<double>(problem.n - problem.kappa) - y.sum();
    return c;
  };
  spec.jac_ineq = [&problem, n](const Vec& z) -> Mat {
    Vec x = z.head(n);
    Vec y = z.tail(n);
    Mat jac = Mat::Zero(problem.m + 2 * n + 1, 2 * n);
    if (problem.m > 0) {
      Mat jg = problem.jac_g
                   ? problem.jac_g(x)
                   : detail::central_jacobian(problem.g, problem.m, x, detail::kDefaultFdStep);
      jac.topLeftCorner(problem.m, n) = jg;
    }
    for (int i = 0; i < n; ++i) {
      jac(problem.m + i, i) = y(i);
      jac(problem.m + i, n + i) = x(i);
      jac(problem.m + n + i, i) = -y(i);
      jac(problem.m + n + i, n + i) = -x(i);
    }
    jac.row(problem.m + 2 * n).tail(n).setConstant(-1.0);
    return jac;
  };

  if (problem.p > 0) {
    spec.n_eq = problem.p;
    spec.c_eq = [&problem, n](const Vec& z) -> Vec { return problem.h(z.head(n)); };
    spec.jac_eq = [&problem, n](const Vec& z) -> Mat {
      Vec x = z.head(n);
      Mat jac = Mat::Zero(problem.p, 2 * n);
      jac.leftCols(n) = problem.jac_h
                            ? problem.jac_h(x)
                            : detail::central_jacobian(problem.h, problem.p, x,
                                                       detail::kDefaultFdStep);
      return jac;
    };
  }

  if (problem.hess_f && (problem.m == 0 || problem.hess_g) &&
      (problem.p == 0 || problem.hess_h)) {
    spec.hess_objective = [&problem, n](const Vec& z) -> Mat {
      Mat h = Mat::Zero(2 * n, 2 * n);
      h.topLeftCorner(n, n) = problem.hess_f(z.head(n));
      return h;
    };
    spec.hess_ineq = [&problem, n](const Vec& z, int row) -> Mat {
      Mat h = Mat::Zero(2 * n, 2 * n);
      if (row < problem.m) {
        h.topLeftCorner(n, n) = problem.hess_g(z.head(n), row);
      } else if (row < problem.m + 2 * n) {
        int k = (row - problem.m) % n;
        double sign = row < problem.m + n ? 1.0 : -1.0;
        h(k, n + k) = sign;
        h(n + k, k) = sign;
      }
      return h;
    };
    if (problem.p > 0) {
      spec.hess_eq = [&problem, n](const Vec& z, int row) -> Mat {
        Mat h = Mat::Zero(2 * n, 2 * n);
        h.topLeftCorner(n, n) = problem.hess_h(z.head(n), row);
        return h;
      };
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  spec.lo = Vec::Constant(2 * n, -inf);
  spec.hi = Vec::Constant(2 * n, inf);
  spec.lo.tail(n).setZero();
  spec.hi.tail(n).setOnes();
  return spec;
}

/// KKT residual of NLP(t) at a given primal pair and multipliers: the
/// projected stationarity residual plus the complementarity residual.
inline double kkt_residual_nlpt(const Problem& problem, double t, const PrimalPair& pair,
                                const NlpResult& mult) {
  NlpSpec spec = build_nlpt(problem, t);
  Vec z(2 * problem.n);
  z.head(problem.n) = pair.x;
  z.tail(problem.n) = pair.y;
  Vec grad_l = spec.gradient(z);
  grad_l += spec.jac_ineq(z).transpose() * mult.lam_ineq;
  if (spec.n_eq > 0) grad_l += spec.jac_eq(z).transpose() * mult.lam_eq;
  double stat = inf_norm(z - detail::project_box(z - grad_l, spec.lo, spec.hi));
  Vec c = spec.c_ineq(z);
  double comp = 0.0;
  for (int i = 0; i < spec.n_ineq; ++i) comp = std::max(comp, std::abs(mult.lam_ineq(i) * c(i)));
  return stat + comp;
}

/// Drives the Scholtes loop: solve NLP(t_k) warm-started from the previous
/// iterate, shrink t by sigma, stop once the complementarity violation meets
/// comp_tol and the rounded point is feasible for the reformulation. The
/// final point is certified for S- and M-stationarity and annotated with the
/// constraint-qualification report.
inline RegularizationPath solve_path(const Problem& problem, const PrimalPair& start,
                                     const PathOptions& popts = {}, const NlpOptions& nopts = {},
                                     const Tolerances& tols = {}) {
  validate(problem);
  if (!(popts.sigma > 0.0 && popts.sigma < 1.0))
    throw EvaluationError("solve_path: sigma must lie in (0, 1)");

  RegularizationPath path;
  const int n = problem.n;
  Vec z(2 * n);
  z.head(n) = start.x;
  z.tail(n) = start.y;

  SplitMix64 retry_rng(popts.seed ^ 0x9E3779B97F4A7C15ull);
  double t = popts.t0;
  Vec lam_warm, mu_warm;
  while (t >= popts.t_min) {
    NlpSpec spec = build_nlpt(problem, t);
    NlpResult solved = solve_nlp(spec, z, nopts, lam_warm, mu_warm);
    if (solved.status != NlpStatus::Converged) {
      Vec perturbed = z + 1e-3 * retry_rng.gaussian_vector(2 * n);
      NlpResult retried = solve_nlp(spec, perturbed, nopts, lam_warm, mu_warm);
      if (retried.status == NlpStatus::Converged) solved = retried;
    }
    lam_warm = solved.lam_ineq;
    mu_warm = solved.lam_eq;

    PathEntry entry;
    entry.t = t;
    entry.x = solved.z.head(n);
    entry.y = solved.z.tail(n);
    entry.kkt_residual = solved.kkt_residual;
    entry.comp_violation = inf_norm(entry.x.cwiseProduct(entry.y));
    entry.solver_status = solved.status;
    path.entries.push_back(entry);
    z = solved.z;

    if (entry.comp_violation <= popts.comp_tol) {
      Vec x_round = entry.x;
      for (int i = 0; i < n; ++i)
        if (std::abs(x_round(i)) <= popts.rounding_tol) x_round(i) = 0.0;
      if (is_feasible_original(problem, x_round, tols)) {
        // The solver's y may rest at non-vertex values that misclassify
        // I_00 against I_0+; recompleting fixes the index sets.
        Vec y_round = complete_y(problem, x_round, tols);
        if (is_feasible_reformulation(problem, {x_round, y_round}, tols)) {
          path.converged = true;
          path.final_point = {x_round, y_round};
          break;
        }
      }
    }
    t *= popts.sigma;
  }

  if (!path.converged) {
    if (path.entries.empty()) throw PathStalled("solve_path: no entries solved");
    path.final_point = {path.entries.back().x, path.entries.back().y};
    path.final_f = problem.f(path.final_point.x);
    return path;
  }

  path.final_f = problem.f(path.final_point.x);
  path.final_certificate = certify_s_stationary(problem, path.final_point, tols);
  path.m_certificate = certify_m_stationary(problem, path.final_point.x, tols);
  path.cq_report = check_constraint_qualifications(problem, path.final_point.x, tols);
  return path;
}

/// Overload for an x-only start: y is completed when x is feasible for the
/// original problem, otherwise set to the uniform value (n - kappa)/n.
inline RegularizationPath solve_path(const Problem& problem, const Vec& start_x,
                                     const PathOptions& popts = {}, const NlpOptions& nopts = {},
                                     const Tolerances& tols = {}) {
  PrimalPair start;
  start.x = start_x;
  if (is_feasible_original(problem, start_x, tols)) {
    start.y = complete_y(problem, start_x, tols);
  } else {
    start.y = Vec::Constant(problem.n,
                            static_cast<double>(problem.n - problem.kappa) / problem.n);
  }
  return solve_path(problem, start, popts, nopts, tols);
}

}  // namespace cardopt
