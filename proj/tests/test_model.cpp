#include <catch2/catch_amalgamated.hpp>

#include "cardopt/problem.hpp"
#include "cardopt/problems.hpp"
#include "support/test_util.hpp"

using namespace cardopt;
using cardopt::testing::approx_equal;
using cardopt::testing::vec;

TEST_CASE("evaluate on the distance toy problem") {
  Problem problem = builtin("dist3d");
  EvalBundle eval = evaluate(problem, vec({0, 0, 0}), true);
  CHECK(eval.f == Catch::Approx(5.0));
  CHECK(approx_equal(eval.grad_f, vec({0, -2, -4})));
  CHECK(approx_equal(Vec(eval.hess_f * vec({1, 1, 1})), vec({2, 2, 2})));
}

TEST_CASE("evaluate on the unit disk problem") {
  Problem problem = builtin("disk2d");
  EvalBundle eval = evaluate(problem, vec({0, 0}), false);
  CHECK(eval.f == Catch::Approx(0.0));
  CHECK(eval.g(0) == Catch::Approx(-1.0));
  CHECK(approx_equal(eval.grad_f, vec({0, 0})));
}

TEST_CASE("evaluate rejects non-finite input") {
  Problem problem = builtin("disk2d");
  Vec x = vec({0, 0});
  x(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(evaluate(problem, x, false), EvaluationError);
}

TEST_CASE("evaluate rejects shape mismatches and non-finite callbacks") {
  Problem problem = builtin("disk2d");
  problem.grad_f = [](const Vec&) { return Vec::Zero(3); };
  CHECK_THROWS_AS(evaluate(problem, vec({0, 0}), false), EvaluationError);

  Problem inf_problem = builtin("disk2d");
  inf_problem.f = [](const Vec&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(evaluate(inf_problem, vec({0, 0}), false), EvaluationError);
}

TEST_CASE("evaluate symmetrizes user Hessians") {
  Problem problem = builtin("disk2d");
  problem.hess_f = [](const Vec&) {
    Mat h(2, 2);
    h << 2.0, 1e-13, -1e-13, 2.0;
    return h;
  };
  EvalBundle eval = evaluate(problem, vec({0.1, 0.2}), true);
  CHECK((eval.hess_f - eval.hess_f.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("problem invariants are validated") {
  Problem problem = builtin("disk2d");
  problem.kappa = 2;  // kappa < n violated
  CHECK_THROWS_AS(evaluate(problem, vec({0, 0}), false), EvaluationError);
}

namespace {

Problem random_quadratic(std::uint64_t seed, int n, int m, int p) {
  SplitMix64 rng(seed);
  Mat root(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) root(i, j) = rng.next_gaussian();
  Mat q = root.transpose() * root + Mat::Identity(n, n);
  Vec c = rng.gaussian_vector(n);
  Mat a_ineq(m, n);
  for (int i = 0; i < m; ++i) a_ineq.row(i) = rng.gaussian_vector(n).transpose();
  Vec b_ineq = rng.gaussian_vector(m);
  Mat a_eq(p, n);
  for (int i = 0; i < p; ++i) a_eq.row(i) = rng.gaussian_vector(n).transpose();
  Vec b_eq = rng.gaussian_vector(p);
  return make_quadratic_problem(1, q, c, a_ineq, b_ineq, a_eq, b_eq);
}

}  // namespace

TEST_CASE("check_derivatives passes on an exact quadratic") {
  Problem problem = random_quadratic(42, 4, 2, 1);
  SplitMix64 rng(7);
  DerivativeReport report = check_derivatives(problem, rng.gaussian_vector(4), 1e-5, 1e-5);
  CHECK(report.pass);
  CHECK(report.max_rel_error() <= 1e-6);
}

TEST_CASE("check_derivatives flags a scaled gradient") {
  Problem problem = random_quadratic(43, 3, 0, 0);
  auto good_grad = problem.grad_f;
  problem.grad_f = [good_grad](const Vec& x) -> Vec { return 2.0 * good_grad(x); };
  DerivativeReport report = check_derivatives(problem, vec({0.3, -0.2, 1.0}), 1e-5, 1e-5);
  CHECK_FALSE(report.pass);
  REQUIRE(!report.blocks.empty());
  CHECK(report.blocks[0].block == "objective_gradient");
  CHECK_FALSE(report.blocks[0].pass);
}

TEST_CASE("linear equality constraints have exactly zero Hessian error") {
  // Integer data and a power-of-two step keep the finite differences exact.
  Mat a_eq(2, 3);
  a_eq << 1, 2, -3, 4, 0, 1;
  Vec b_eq = vec({1, 2});
  Problem problem = make_quadratic_problem(1, Mat::Identity(3, 3), vec({0, 0, 0}), Mat(0, 3),
                                           Vec(0), a_eq, b_eq);
  DerivativeReport report = check_derivatives(problem, vec({0, 0, 0}), 0.03125, 1e-5);
  bool found = false;
  for (const auto& block : report.blocks) {
    if (block.block == "eq_hessians") {
      found = true;
      CHECK(block.max_rel_error == 0.0);
    }
  }
  CHECK(found);
}

TEST_CASE("finite-difference fallback agrees with analytic derivatives") {
  Problem analytic = builtin("dist3d");
  Problem fd_only = analytic;
  fd_only.grad_f = nullptr;
  fd_only.hess_f = nullptr;
  Vec x = vec({0.4, -1.2, 0.7});
  EvalBundle a = evaluate(analytic, x, true);
  EvalBundle b = evaluate(fd_only, x, true);
  CHECK(approx_equal(a.grad_f, b.grad_f, 1e-7));
  CHECK((a.hess_f - b.hess_f).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("evaluate is deterministic") {
  Problem problem = builtin("sparse_lsq", {6, 2, 11});
  SplitMix64 rng(3);
  Vec x = rng.gaussian_vector(6);
  EvalBundle a = evaluate(problem, x, true);
  EvalBundle b = evaluate(problem, x, true);
  CHECK(a.f == b.f);
  CHECK(inf_norm(a.grad_f - b.grad_f) == 0.0);
  CHECK((a.hess_f - b.hess_f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("built-in Hessians match finite differences") {
  for (const char* name : {"disk2d", "dist3d"}) {
    Problem problem = builtin(name);
    SplitMix64 rng(5);
    Vec x = rng.gaussian_vector(problem.n);
    DerivativeReport report = check_derivatives(problem, x, 1e-5, 1e-5);
    INFO(name);
    CHECK(report.pass);
  }
}
