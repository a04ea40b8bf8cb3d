#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cardopt/errors.hpp"
#include "cardopt/linalg.hpp"

namespace cardopt {

/// A cardinality-constrained nonlinear program
///
///   min f(x)  s.t.  g(x) <= 0,  h(x) = 0,  ||x||_0 <= kappa,
///
/// with user-supplied smooth callbacks. Derivative callbacks may be left
/// empty, in which case central finite differences of the value callbacks
/// are used (step 1e-6*(1+|x_i|)). Hessian callbacks take the constraint
/// component index and return the n-by-n Hessian of that component.
///
/// Evaluators must be reentrant: the library may call them concurrently
/// from independent solves and provides no synchronization.
struct Problem {
  int n = 0;
  int kappa = 0;
  int m = 0;
  int p = 0;
  std::string name;

  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad_f;
  std::function<Mat(const Vec&)> hess_f;

  std::function<Vec(const Vec&)> g;
  std::function<Mat(const Vec&)> jac_g;
  std::function<Mat(const Vec&, int)> hess_g;

  std::function<Vec(const Vec&)> h;
  std::function<Mat(const Vec&)> jac_h;
  std::function<Mat(const Vec&, int)> hess_h;
};

/// All quantities of one evaluation point. Hessians are present iff they
/// were requested; they are symmetrized on ingestion.
struct EvalBundle {
  double f = 0.0;
  Vec grad_f;
  Vec g;
  Vec h;
  Mat jac_g;
  Mat jac_h;
  bool has_hessians = false;
  Mat hess_f;
  std::vector<Mat> hess_g;
  std::vector<Mat> hess_h;
};

namespace detail {

inline double fd_step(double step, double xi) { return step * (1.0 + std::abs(xi)); }

constexpr double kDefaultFdStep = 1e-6;
// Value-based second differences lose half the working precision; they use a
// wider stencil than first differences.
constexpr double kValueHessianFdStep = 1e-4;

template <typename F>
Vec central_gradient(const F& f, const Vec& x, double step) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    double hi = fd_step(step, x(i));
    xp(i) = x(i) + hi;
    double fp = f(xp);
    xp(i) = x(i) - hi;
    double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * hi);
  }
  return g;
}

template <typename F>
Mat central_jacobian(const F& fvec, int rows, const Vec& x, double step) {
  Mat jac(rows, x.size());
  Vec xp = x;
  for (int j = 0; j < x.size(); ++j) {
    double hj = fd_step(step, x(j));
    xp(j) = x(j) + hj;
    Vec fp = fvec(xp);
    xp(j) = x(j) - hj;
    Vec fm = fvec(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * hj);
  }
  return jac;
}

/// Second-order central differences of a scalar function; independent of any
/// supplied first derivatives.
template <typename F>
Mat central_hessian(const F& f, const Vec& x, double step) {
  const int n = static_cast<int>(x.size());
  Mat hess(n, n);
  Vec xp = x;
  double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    double hi = fd_step(step, x(i));
    xp(i) = x(i) + hi;
    double fp = f(xp);
    xp(i) = x(i) - hi;
    double fm = f(xp);
    xp(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (int j = i + 1; j < n; ++j) {
      double hj = fd_step(step, x(j));
      xp(i) = x(i) + hi;
      xp(j) = x(j) + hj;
      double fpp = f(xp);
      xp(j) = x(j) - hj;
      double fpm = f(xp);
      xp(i) = x(i) - hi;
      xp(j) = x(j) + hj;
      double fmp = f(xp);
      xp(j) = x(j) - hj;
      double fmm = f(xp);
      xp(i) = x(i);
      xp(j) = x(j);
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return hess;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw EvaluationError(msg);
}

}  // namespace detail

/// Checks the structural invariants of a problem definition.
inline void validate(const Problem& problem) {
  if (problem.n <= 0) throw EvaluationError("problem dimension must be positive");
  if (!(problem.kappa > 0 && problem.kappa < problem.n))
    throw EvaluationError("cardinality bound must satisfy 0 < kappa < n");
  if (problem.m < 0 || problem.p < 0)
    throw EvaluationError("constraint counts must be nonnegative");
  if (!problem.f) throw EvaluationError("objective callback missing");
  if (problem.m > 0 && !problem.g) throw EvaluationError("inequality callback missing");
  if (problem.p > 0 && !problem.h) throw EvaluationError("equality callback missing");
}

/// Evaluates all problem quantities at x. Derivatives fall back to central
/// finite differences when the corresponding callback is empty. Throws
/// EvaluationError on non-finite values or shape mismatches.
inline EvalBundle evaluate(const Problem& problem, const Vec& x, bool with_hessians = false) {
  using detail::require;
  validate(problem);
  require(x.size() == problem.n, "x has wrong length");
  require(is_finite(x), "x contains non-finite entries");

  EvalBundle out;
  out.f = problem.f(x);
  require(std::isfinite(out.f), "objective returned a non-finite value");

  out.grad_f = problem.grad_f ? problem.grad_f(x)
                              : detail::central_gradient(problem.f, x, detail::kDefaultFdStep);
  require(out.grad_f.size() == problem.n, "grad_f has wrong length");
  require(is_finite(out.grad_f), "grad_f contains non-finite entries");

  if (problem.m > 0) {
    out.g = problem.g(x);
    require(out.g.size() == problem.m, "g has wrong length");
    require(is_finite(out.g), "g contains non-finite entries");
    out.jac_g = problem.jac_g
                    ? problem.jac_g(x)
                    : detail::central_jacobian(problem.g, problem.m, x, detail::kDefaultFdStep);
    require(out.jac_g.rows() == problem.m && out.jac_g.cols() == problem.n,
            "jac_g has wrong shape");
    require(is_finite(out.jac_g), "jac_g contains non-finite entries");
  } else {
    out.g.resize(0);
    out.jac_g.resize(0, problem.n);
  }

  if (problem.p > 0) {
    out.h = problem.h(x);
    require(out.h.size() == problem.p, "h has wrong length");
    require(is_finite(out.h), "h contains non-finite entries");
    out.jac_h = problem.jac_h
                    ? problem.jac_h(x)
                    : detail::central_jacobian(problem.h, problem.p, x, detail::kDefaultFdStep);
    require(out.jac_h.rows() == problem.p && out.jac_h.cols() == problem.n,
            "jac_h has wrong shape");
    require(is_finite(out.jac_h), "jac_h contains non-finite entries");
  } else {
    out.h.resize(0);
    out.jac_h.resize(0, problem.n);
  }

  if (with_hessians) {
    out.has_hessians = true;
    Mat hf;
    if (problem.hess_f) {
      hf = problem.hess_f(x);
    } else if (problem.grad_f) {
      hf = detail::central_jacobian(problem.grad_f, problem.n, x, detail::kDefaultFdStep);
    } else {
      hf = detail::central_hessian(problem.f, x, detail::kValueHessianFdStep);
    }
    require(hf.rows() == problem.n && hf.cols() == problem.n, "hess_f has wrong shape");
    require(is_finite(hf), "hess_f contains non-finite entries");
    out.hess_f = symmetrized(hf);

    out.hess_g.reserve(problem.m);
    for (int i = 0; i < problem.m; ++i) {
      Mat hi;
      if (problem.hess_g) {
        hi = problem.hess_g(x, i);
      } else if (problem.jac_g) {
        auto grad_gi = [&](const Vec& z) -> Vec { return problem.jac_g(z).row(i).transpose(); };
        hi = detail::central_jacobian(grad_gi, problem.n, x, detail::kDefaultFdStep);
      } else {
        auto gi = [&](const Vec& z) { return problem.g(z)(i); };
        hi = detail::central_hessian(gi, x, detail::kValueHessianFdStep);
      }
      require(hi.rows() == problem.n && hi.cols() == problem.n, "hess_g has wrong shape");
      require(is_finite(hi), "hess_g contains non-finite entries");
      out.hess_g.push_back(symmetrized(hi));
    }

    out.hess_h.reserve(problem.p);
    for (int i = 0; i < problem.p; ++i) {
      Mat hi;
      if (problem.hess_h) {
        hi = problem.hess_h(x, i);
      } else if (problem.jac_h) {
        auto grad_hi = [&](const Vec& z) -> Vec { return problem.jac_h(z).row(i).transpose(); };
        hi = detail::central_jacobian(grad_hi, problem.n, x, detail::kDefaultFdStep);
      } else {
        auto hh = [&](const Vec& z) { return problem.h(z)(i); };
        hi = detail::central_hessian(hh, x, detail::kValueHessianFdStep);
      }
      require(hi.rows() == problem.n && hi.cols() == problem.n, "hess_h has wrong shape");
      require(is_finite(hi), "hess_h contains non-finite entries");
      out.hess_h.push_back(symmetrized(hi));
    }
  }
  return out;
}

struct DerivativeBlockReport {
  std::string block;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct DerivativeReport {
  std::vector<DerivativeBlockReport> blocks;
  bool pass = true;

  double max_rel_error() const {
    double worst = 0.0;
    for (const auto& b : blocks) worst = std::max(worst, b.max_rel_error);
    return worst;
  }
};

/// Compares the supplied derivatives against central finite differences of
/// the value callbacks. Relative errors are scaled by (1 + max |entry|) of
/// the finite-difference reference per block.
inline DerivativeReport check_derivatives(const Problem& problem, const Vec& x,
                                          double step = 1e-5, double tol = 1e-5) {
  if (step <= 0.0) throw EvaluationError("finite-difference step must be positive");
  EvalBundle exact = evaluate(problem, x, true);

  auto block_error = [](const Mat& supplied, const Mat& reference) {
    double scale = 1.0 + (reference.size() > 0 ? reference.cwiseAbs().maxCoeff() : 0.0);
    double err = (supplied - reference).cwiseAbs().maxCoeff();
    return err / scale;
  };

  DerivativeReport report;
  auto add_block = [&](const std::string& name, double err) {
    report.blocks.push_back({name, err, err <= tol});
    report.pass = report.pass && err <= tol;
  };

  // Gradients and Jacobians are checked against differences of the values;
  // Hessians against differences of the first derivatives, which keeps the
  // reference at first-difference accuracy.
  Vec fd_grad = detail::central_gradient(problem.f, x, step);
  add_block("objective_gradient", block_error(exact.grad_f, fd_grad));
  auto grad_eval = [&](const Vec& z) -> Vec {
    return problem.grad_f ? problem.grad_f(z)
                          : detail::central_gradient(problem.f, z, detail::kDefaultFdStep);
  };
  add_block("objective_hessian",
            block_error(exact.hess_f,
                        symmetrized(detail::central_jacobian(grad_eval, problem.n, x, step))));

  if (problem.m > 0) {
    Mat fd_jac = detail::central_jacobian(problem.g, problem.m, x, step);
    add_block("ineq_jacobian", block_error(exact.jac_g, fd_jac));
    double worst = 0.0;
    for (int i = 0; i < problem.m; ++i) {
      auto grad_gi = [&](const Vec& z) -> Vec {
        if (problem.jac_g) return problem.jac_g(z).row(i).transpose();
        auto gi = [&](const Vec& w) { return problem.g(w)(i); };
        return detail::central_gradient(gi, z, detail::kDefaultFdStep);
      };
      Mat ref = symmetrized(detail::central_jacobian(grad_gi, problem.n, x, step));
      worst = std::max(worst, block_error(exact.hess_g[i], ref));
    }
    add_block("ineq_hessians", worst);
  }

  if (problem.p > 0) {
    Mat fd_jac = detail::central_jacobian(problem.h, problem.p, x, step);
    add_block("eq_jacobian", block_error(exact.jac_h, fd_jac));
    double worst = 0.0;
    for (int i = 0; i < problem.p; ++i) {
      auto grad_hi = [&](const Vec& z) -> Vec {
        if (problem.jac_h) return problem.jac_h(z).row(i).transpose();
        auto hi = [&](const Vec& w) { return problem.h(w)(i); };
        return detail::central_gradient(hi, z, detail::kDefaultFdStep);
      };
      Mat ref = symmetrized(detail::central_jacobian(grad_hi, problem.n, x, step));
      worst = std::max(worst, block_error(exact.hess_h[i], ref));
    }
    add_block("eq_hessians", worst);
  }
  return report;
}

/// Builds a problem with quadratic objective f(x) = x'Qx/2 + c'x and affine
/// constraints g(x) = A_ineq x - b_ineq, h(x) = A_eq x - b_eq.
inline Problem make_quadratic_problem(int kappa, const Mat& q, const Vec& c, const Mat& a_ineq,
                                      const Vec& b_ineq, const Mat& a_eq, const Vec& b_eq,
                                      std::string name = "quadratic") {
  const int n = static_cast<int>(c.size());
  if (q.rows() != n || q.cols() != n) throw EvaluationError("Q has wrong shape");
  if (a_ineq.size() > 0 && a_ineq.cols() != n) throw EvaluationError("A_ineq has wrong shape");
  if (a_eq.size() > 0 && a_eq.cols() != n) throw EvaluationError("A_eq has wrong shape");

  Problem problem;
  problem.n = n;
  problem.kappa = kappa;
  problem.m = static_cast<int>(a_ineq.rows());
  problem.p = static_cast<int>(a_eq.rows());
  problem.name = std::move(name);

  Mat qs = symmetrized(q);
  problem.f = [qs, c](const Vec& x) { return 0.5 * x.dot(qs * x) + c.dot(x); };
  problem.grad_f = [qs, c](const Vec& x) -> Vec { return qs * x + c; };
  problem.hess_f = [qs](const Vec&) { return qs; };

  if (problem.m > 0) {
    Mat ai = a_ineq;
    Vec bi = b_ineq;
    problem.g = [ai, bi](const Vec& x) -> Vec { return ai * x - bi; };
    problem.jac_g = [ai](const Vec&) { return ai; };
    problem.hess_g = [n](const Vec&, int) { return Mat::Zero(n, n); };
  }
  if (problem.p > 0) {
    Mat ae = a_eq;
    Vec be = b_eq;
    problem.h = [ae, be](const Vec& x) -> Vec { return ae * x - be; };
    problem.jac_h = [ae](const Vec&) { return ae; };
    problem.hess_h = [n](const Vec&, int) { return Mat::Zero(n, n); };
  }
  return problem;
}

}  // namespace cardopt
