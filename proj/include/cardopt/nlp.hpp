#pragma once

#include <deque>
#include <functional>

#include "cardopt/problem.hpp"

namespace cardopt {

/// A smooth nonlinear program
///   min f(z)  s.t.  c_ineq(z) <= 0,  c_eq(z) = 0,  lo <= z <= hi,
/// with callback evaluators. Empty bound vectors mean an unbounded box.
/// Hessian callbacks are optional; when all required ones are present the
/// inner solver takes projected Newton steps, otherwise limited-memory
/// quasi-Newton steps.
struct NlpSpec {
  int dim = 0;
  std::function<double(const Vec&)> objective;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hess_objective;
  int n_ineq = 0;
  std::function<Vec(const Vec&)> c_ineq;
  std::function<Mat(const Vec&)> jac_ineq;
  std::function<Mat(const Vec&, int)> hess_ineq;
  int n_eq = 0;
  std::function<Vec(const Vec&)> c_eq;
  std::function<Mat(const Vec&)> jac_eq;
  std::function<Mat(const Vec&, int)> hess_eq;
  Vec lo;
  Vec hi;

  bool has_hessians() const {
    return hess_objective && (n_ineq == 0 || hess_ineq) && (n_eq == 0 || hess_eq);
  }
};

enum class NlpStatus { Converged, IterationLimit, InfeasibleStall };

struct NlpOptions {
  double stat_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_outer = 100;
  int max_inner = 500;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double violation_shrink = 4.0;  ///< required per-outer-iteration progress factor
  double multiplier_bound = 1e8;
  int lbfgs_memory = 10;
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
};

struct NlpResult {
  Vec z;
  Vec lam_ineq;  ///< nonnegative multipliers of c_ineq <= 0
  Vec lam_eq;    ///< multipliers of c_eq = 0
  Vec lam_lo;    ///< multipliers of the lower bounds
  Vec lam_hi;    ///< multipliers of the upper bounds
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  NlpStatus status = NlpStatus::IterationLimit;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

namespace detail {

inline Vec project_box(const Vec& z, const Vec& lo, const Vec& hi) {
  Vec out = z;
  if (lo.size() == z.size()) out = out.cwiseMax(lo);
  if (hi.size() == z.size()) out = out.cwiseMin(hi);
  return out;
}

/// Projected L-BFGS with Armijo backtracking along the projection arc.
/// Returns the number of iterations spent.
template <typename ValueFn, typename GradFn>
int minimize_box(const ValueFn& value, const GradFn& grad, Vec& z, const Vec& lo, const Vec& hi,
                 double tol, int max_iter, const NlpOptions& opts) {
  z = project_box(z, lo, hi);
  double fz = value(z);
  Vec g = grad(z);

  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y)
  bool reset_tried = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    double pg = inf_norm(z - project_box(z - g, lo, hi));
    if (pg <= tol) break;

    // Two-loop recursion on the stored curvature pairs.
    Vec d = -g;
    if (!pairs.empty()) {
      std::vector<double> alpha(pairs.size());
      Vec q = -g;
      for (int k = static_cast<int>(pairs.size()) - 1; k >= 0; --k) {
        const auto& [s, y] = pairs[k];
        double rho = 1.0 / s.dot(y);
        alpha[k] = rho * s.dot(q);
        q -= alpha[k] * y;
      }
      const auto& [s_last, y_last] = pairs.back();
      q *= s_last.dot(y_last) / y_last.dot(y_last);
      for (size_t k = 0; k < pairs.size(); ++k) {
        const auto& [s, y] = pairs[k];
        double rho = 1.0 / s.dot(y);
        double beta = rho * y.dot(q);
        q += (alpha[k] - beta) * s;
      }
      d = q;
    }
    if (g.dot(d) > -1e-14 * d.norm() * g.norm()) {
      pairs.clear();
      d = -g;
    }

    // Approximate Armijo: near the floating-point noise floor of the value
    // the predicted decrease per step falls below eps*|f|, so a roundoff
    // allowance keeps the gradient-accurate final iterations moving.
    const double f_noise = 1e-14 * (1.0 + std::abs(fz));
    double step = 1.0;
    bool accepted = false;
    Vec z_new;
    double f_new = fz;
    for (int ls = 0; ls < 64; ++ls) {
      z_new = project_box(z + step * d, lo, hi);
      Vec displacement = z_new - z;
      double slope = g.dot(displacement);
      if (slope < 0.0) {
        f_new = value(z_new);
        if (f_new <= fz + opts.armijo_slope * slope + f_noise) {
          accepted = true;
          break;
        }
      }
      step *= opts.backtrack_factor;
    }
    if (!accepted) {
      if (reset_tried || pairs.empty()) break;
      pairs.clear();
      reset_tried = true;
      continue;
    }
    reset_tried = false;

    Vec g_new = grad(z_new);
    Vec s = z_new - z;
    Vec y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > opts.lbfgs_memory) pairs.pop_front();
    }
    z = z_new;
    fz = f_new;
    g = g_new;
  }
  return iter;
}

/// Projected Newton with an active-bound reduction: binding coordinates with
/// inward-pointing gradients are frozen, the Newton system is solved on the
/// free block (Levenberg damping until it produces descent), and steps are
/// globalized by Armijo backtracking along the projection arc.
template <typename ValueFn, typename GradFn, typename HessFn>
int minimize_box_newton(const ValueFn& value, const GradFn& grad, const HessFn& hess, Vec& z,
                        const Vec& lo, const Vec& hi, double tol, int max_iter,
                        const NlpOptions& opts) {
  const int dim = static_cast<int>(z.size());
  z = project_box(z, lo, hi);
  double fz = value(z);
  Vec g = grad(z);

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    double pg = inf_norm(z - project_box(z - g, lo, hi));
    if (pg <= tol) break;

    std::vector<int> free_coords;
    free_coords.reserve(dim);
    for (int i = 0; i < dim; ++i) {
      bool at_lo = lo.size() == dim && z(i) <= lo(i) + 1e-12 * (1.0 + std::abs(lo(i))) && g(i) > 0.0;
      bool at_hi = hi.size() == dim && z(i) >= hi(i) - 1e-12 * (1.0 + std::abs(hi(i))) && g(i) < 0.0;
      if (!at_lo && !at_hi) free_coords.push_back(i);
    }

    Vec d = Vec::Zero(dim);
    bool have_newton = false;
    if (!free_coords.empty()) {
      const int nf = static_cast<int>(free_coords.size());
      Mat h = hess(z);
      Mat h_ff(nf, nf);
      Vec g_f(nf);
      for (int a = 0; a < nf; ++a) {
        g_f(a) = g(free_coords[a]);
        for (int b = 0; b < nf; ++b) h_ff(a, b) = h(free_coords[a], free_coords[b]);
      }
      double damping = 0.0;
      double scale = 1.0 + h_ff.cwiseAbs().maxCoeff();
      for (int attempt = 0; attempt < 12; ++attempt) {
        Mat h_damped = h_ff + damping * Mat::Identity(nf, nf);
        Eigen::LDLT<Mat> ldlt(h_damped);
        if (ldlt.info() == Eigen::Success) {
          Vec d_f = ldlt.solve(-g_f);
          if (d_f.allFinite() && g_f.dot(d_f) < -1e-14 * d_f.norm() * g_f.norm()) {
            for (int a = 0; a < nf; ++a) d(free_coords[a]) = d_f(a);
            have_newton = true;
            break;
          }
        }
        damping = damping == 0.0 ? 1e-10 * scale : 100.0 * damping;
      }
    }
    if (!have_newton) d = -g;

    const double f_noise = 1e-14 * (1.0 + std::abs(fz));
    auto line_search = [&](const Vec& dir, Vec& out_z, double& out_f) {
      double step = 1.0;
      for (int ls = 0; ls < 64; ++ls) {
        out_z = project_box(z + step * dir, lo, hi);
        Vec displacement = out_z - z;
        double slope = g.dot(displacement);
        if (slope < 0.0) {
          out_f = value(out_z);
          if (out_f <= fz + opts.armijo_slope * slope + f_noise) return true;
        }
        step *= opts.backtrack_factor;
      }
      return false;
    };

    Vec z_new;
    double f_new = fz;
    bool accepted = line_search(d, z_new, f_new);
    if (!accepted && have_newton) accepted = line_search(-g, z_new, f_new);
    if (!accepted) break;

    z = z_new;
    fz = f_new;
    g = grad(z);
  }
  return iter;
}

}  // namespace detail

/// Solves the NLP with an augmented-Lagrangian outer loop (quadratic penalty
/// on violated constraints, first-order multiplier updates) over the
/// bound-constrained inner solver. The first iterate meeting stat_tol and
/// feas_tol is returned; otherwise the best iterate with a degraded status.
/// Optional multiplier estimates warm-start the outer loop.
inline NlpResult solve_nlp(const NlpSpec& spec, const Vec& start, const NlpOptions& opts = {},
                           const Vec& lam_start = Vec(), const Vec& mu_start = Vec()) {
  if (start.size() != spec.dim) throw EvaluationError("solve_nlp: start has wrong length");

  NlpResult result;
  result.lam_ineq = Vec::Zero(spec.n_ineq);
  result.lam_eq = Vec::Zero(spec.n_eq);
  result.lam_lo = Vec::Zero(spec.dim);
  result.lam_hi = Vec::Zero(spec.dim);

  auto eval_ineq = [&](const Vec& z) -> Vec { return spec.n_ineq > 0 ? spec.c_ineq(z) : Vec(0); };
  auto eval_eq = [&](const Vec& z) -> Vec { return spec.n_eq > 0 ? spec.c_eq(z) : Vec(0); };

  if (spec.dim == 0) {
    result.z = Vec(0);
    Vec c = eval_ineq(result.z);
    Vec h = eval_eq(result.z);
    result.constraint_violation = std::max(std::max(max_or_zero(c), 0.0), inf_norm(h));
    result.status = result.constraint_violation <= opts.feas_tol ? NlpStatus::Converged
                                                                 : NlpStatus::InfeasibleStall;
    return result;
  }

  Vec z = detail::project_box(start, spec.lo, spec.hi);
  Vec lam = lam_start.size() == spec.n_ineq ? Vec(lam_start.cwiseMax(0.0))
                                            : Vec(Vec::Zero(spec.n_ineq));
  Vec mu = mu_start.size() == spec.n_eq ? mu_start : Vec(Vec::Zero(spec.n_eq));
  double penalty = opts.penalty_init;

  auto stationarity = [&](const Vec& at, const Vec& lam_k, const Vec& mu_k) -> Vec {
    Vec grad_l = spec.gradient(at);
    if (spec.n_ineq > 0) grad_l += spec.jac_ineq(at).transpose() * lam_k;
    if (spec.n_eq > 0) grad_l += spec.jac_eq(at).transpose() * mu_k;
    return grad_l;
  };

  double prev_violation = std::numeric_limits<double>::infinity();
  double prev_comp = std::numeric_limits<double>::infinity();
  std::vector<double> kkt_history;
  // Inner solves start loose and tighten as the multiplier estimates settle.
  double inner_tol = std::max(0.5 * opts.stat_tol, 1e-3);
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    result.outer_iterations = outer + 1;

    auto al_value = [&](const Vec& at) {
      double val = spec.objective(at);
      if (spec.n_ineq > 0) {
        Vec shifted = (lam + penalty * spec.c_ineq(at)).cwiseMax(0.0);
        val += (shifted.squaredNorm() - lam.squaredNorm()) / (2.0 * penalty);
      }
      if (spec.n_eq > 0) {
        Vec h = spec.c_eq(at);
        val += mu.dot(h) + 0.5 * penalty * h.squaredNorm();
      }
      return val;
    };
    auto al_grad = [&](const Vec& at) -> Vec {
      Vec grad = spec.gradient(at);
      if (spec.n_ineq > 0) {
        Vec shifted = (lam + penalty * spec.c_ineq(at)).cwiseMax(0.0);
        grad += spec.jac_ineq(at).transpose() * shifted;
      }
      if (spec.n_eq > 0) {
        Vec h = spec.c_eq(at);
        grad += spec.jac_eq(at).transpose() * (mu + penalty * h);
      }
      return grad;
    };

    if (spec.has_hessians()) {
      // Hessian of the augmented Lagrangian on its smooth piece.
      auto al_hess = [&](const Vec& at) -> Mat {
        Mat h = spec.hess_objective(at);
        if (spec.n_ineq > 0) {
          Vec shifted = lam + penalty * spec.c_ineq(at);
          Mat jac = spec.jac_ineq(at);
          for (int i = 0; i < spec.n_ineq; ++i) {
            if (shifted(i) <= 0.0) continue;
            h += shifted(i) * spec.hess_ineq(at, i);
            h += penalty * jac.row(i).transpose() * jac.row(i);
          }
        }
        if (spec.n_eq > 0) {
          Vec ceq = spec.c_eq(at);
          Mat jac = spec.jac_eq(at);
          for (int j = 0; j < spec.n_eq; ++j) {
            h += (mu(j) + penalty * ceq(j)) * spec.hess_eq(at, j);
            h += penalty * jac.row(j).transpose() * jac.row(j);
          }
        }
        return h;
      };
      result.inner_iterations += detail::minimize_box_newton(
          al_value, al_grad, al_hess, z, spec.lo, spec.hi, inner_tol, opts.max_inner, opts);
    } else {
      result.inner_iterations +=
          detail::minimize_box(al_value, al_grad, z, spec.lo, spec.hi, inner_tol, opts.max_inner,
                               opts);
    }

    Vec c = eval_ineq(z);
    Vec h = eval_eq(z);
    Vec lam_new =
        (lam + penalty * c).cwiseMax(0.0).cwiseMin(Vec::Constant(spec.n_ineq, opts.multiplier_bound));
    Vec mu_new = (mu + penalty * h)
                     .cwiseMax(Vec::Constant(spec.n_eq, -opts.multiplier_bound))
                     .cwiseMin(Vec::Constant(spec.n_eq, opts.multiplier_bound));

    double violation = std::max(std::max(max_or_zero(c), 0.0), inf_norm(h));
    Vec grad_l = stationarity(z, lam_new, mu_new);
    double stat_res = inf_norm(z - detail::project_box(z - grad_l, spec.lo, spec.hi));
    double comp_res = 0.0;
    for (int i = 0; i < spec.n_ineq; ++i) comp_res = std::max(comp_res, std::abs(lam_new(i) * c(i)));
    double kkt = std::max(stat_res, comp_res);

    result.z = z;
    result.lam_ineq = lam_new;
    result.lam_eq = mu_new;
    result.kkt_residual = kkt;
    result.constraint_violation = violation;

    if (kkt <= opts.stat_tol && violation <= opts.feas_tol) {
      result.status = NlpStatus::Converged;
      break;
    }
    // Feasible iterates whose KKT residual has stopped improving over ten
    // outer rounds will not recover; give up early instead of burning the
    // whole budget.
    kkt_history.push_back(kkt);
    if (violation <= opts.feas_tol && kkt_history.size() >= 10 &&
        kkt > 0.5 * kkt_history[kkt_history.size() - 10])
      break;
    // The penalty grows when feasibility or complementarity fails to keep
    // shrinking against the previous iteration. The complementarity of a
    // multiplier on a slightly inactive constraint decays at rate
    // penalty * |c_i| per update, so stalls there need a larger penalty too.
    bool feasibility_stall =
        violation > opts.feas_tol && violation > prev_violation / opts.violation_shrink;
    bool comp_stall = violation <= opts.feas_tol && comp_res > opts.stat_tol &&
                      comp_res > prev_comp / opts.violation_shrink;
    if ((feasibility_stall || comp_stall) && penalty < 1e8) penalty *= opts.penalty_growth;
    prev_violation = violation;
    prev_comp = comp_res;
    inner_tol = std::max(0.5 * opts.stat_tol, 0.1 * inner_tol);
    lam = lam_new;
    mu = mu_new;
  }

  if (result.status != NlpStatus::Converged)
    result.status = result.constraint_violation > opts.feas_tol ? NlpStatus::InfeasibleStall
                                                                : NlpStatus::IterationLimit;

  // Implicit bound multipliers from the final Lagrangian gradient.
  Vec grad_l = stationarity(result.z, result.lam_ineq, result.lam_eq);
  for (int i = 0; i < spec.dim; ++i) {
    if (spec.lo.size() == spec.dim && result.z(i) <= spec.lo(i) + 1e-12 && grad_l(i) > 0.0)
      result.lam_lo(i) = grad_l(i);
    if (spec.hi.size() == spec.dim && result.z(i) >= spec.hi(i) - 1e-12 && grad_l(i) < 0.0)
      result.lam_hi(i) = -grad_l(i);
  }
  return result;
}

/// Solves the restriction of a cardinality-constrained problem to a support:
/// coordinates off the support are fixed to exact zero and eliminated from
/// the solve. The returned iterate is embedded back into full dimension.
inline NlpResult solve_restricted(const Problem& problem, const IndexSet& support,
                                  const Vec& start, const NlpOptions& opts = {}) {
  validate(problem);
  if (static_cast<int>(support.size()) > problem.kappa)
    throw InfeasibleInput("solve_restricted: support larger than the cardinality bound");

  const int dim = static_cast<int>(support.size());
  auto embed = [support, n = problem.n](const Vec& zfree) -> Vec {
    Vec x = Vec::Zero(n);
    for (int k = 0; k < static_cast<int>(support.size()); ++k) x(support[k]) = zfree(k);
    return x;
  };
  auto restrict_cols = [support](const Mat& jac) -> Mat {
    Mat out(jac.rows(), support.size());
    for (size_t k = 0; k < support.size(); ++k) out.col(k) = jac.col(support[k]);
    return out;
  };

  auto restrict_square = [support](const Mat& h) -> Mat {
    Mat out(support.size(), support.size());
    for (size_t a = 0; a < support.size(); ++a)
      for (size_t b = 0; b < support.size(); ++b) out(a, b) = h(support[a], support[b]);
    return out;
  };

  NlpSpec spec;
  spec.dim = dim;
  spec.objective = [&problem, embed](const Vec& zfree) { return problem.f(embed(zfree)); };
  spec.gradient = [&problem, embed, support](const Vec& zfree) -> Vec {
    Vec full = problem.grad_f ? problem.grad_f(embed(zfree))
                              : detail::central_gradient(problem.f, embed(zfree),
                                                         detail::kDefaultFdStep);
    Vec out(support.size());
    for (size_t k = 0; k < support.size(); ++k) out(k) = full(support[k]);
    return out;
  };
  if (problem.hess_f)
    spec.hess_objective = [&problem, embed, restrict_square](const Vec& zfree) -> Mat {
      return restrict_square(problem.hess_f(embed(zfree)));
    };
  if (problem.m > 0) {
    spec.n_ineq = problem.m;
    spec.c_ineq = [&problem, embed](const Vec& zfree) -> Vec { return problem.g(embed(zfree)); };
    spec.jac_ineq = [&problem, embed, restrict_cols](const Vec& zfree) -> Mat {
      Vec full = embed(zfree);
      Mat jac = problem.jac_g ? problem.jac_g(full)
                              : detail::central_jacobian(problem.g, problem.m, full,
                                                         detail::kDefaultFdStep);
      return restrict_cols(jac);
    };
    if (problem.hess_g)
      spec.hess_ineq = [&problem, embed, restrict_square](const Vec& zfree, int row) -> Mat {
        return restrict_square(problem.hess_g(embed(zfree), row));
      };
  }
  if (problem.p > 0) {
    spec.n_eq = problem.p;
    spec.c_eq = [&problem, embed](const Vec& zfree) -> Vec { return problem.h(embed(zfree)); };
    spec.jac_eq = [&problem, embed, restrict_cols](const Vec& zfree) -> Mat {
      Vec full = embed(zfree);
      Mat jac = problem.jac_h ? problem.jac_h(full)
                              : detail::central_jacobian(problem.h, problem.p, full,
                                                         detail::kDefaultFdStep);
      return restrict_cols(jac);
    };
    if (problem.hess_h)
      spec.hess_eq = [&problem, embed, restrict_square](const Vec& zfree, int row) -> Mat {
        return restrict_square(problem.hess_h(embed(zfree), row));
      };
  }

  Vec start_free(dim);
  for (int k = 0; k < dim; ++k) start_free(k) = start(support[k]);
  NlpResult result = solve_nlp(spec, start_free, opts);
  result.z = embed(result.z);
  result.lam_lo = Vec::Zero(problem.n);
  result.lam_hi = Vec::Zero(problem.n);
  return result;
}

}  // namespace cardopt
