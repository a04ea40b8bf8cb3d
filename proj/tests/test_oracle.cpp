#include <catch2/catch_amalgamated.hpp>

#include "cardopt/oracle.hpp"
#include "cardopt/problems.hpp"
#include "support/test_util.hpp"

using namespace cardopt;
using cardopt::testing::approx_equal;
using cardopt::testing::vec;

TEST_CASE("support enumeration is ordered and counted") {
  std::vector<IndexSet> s31 = enumerate_supports(3, 1);
  REQUIRE(s31.size() == 4);
  CHECK(s31[0].empty());
  CHECK(s31[1] == IndexSet{0});
  CHECK(s31[2] == IndexSet{1});
  CHECK(s31[3] == IndexSet{2});

  CHECK(enumerate_supports(4, 2).size() == 11);
  CHECK_THROWS_AS(enumerate_supports(30, 15, 1000000), EnumerationLimit);
}

TEST_CASE("oracle classifies the distance toy exactly as known") {
  Problem dist = builtin("dist3d");
  OracleResult oracle = brute_force_solve(dist);
  CHECK(oracle.enumerated_supports == 4);
  CHECK(approx_equal(oracle.best_x, vec({0, 0, 2}), 1e-6));
  CHECK(oracle.best_f == Catch::Approx(1.0).margin(1e-8));

  std::vector<Vec> m_points;
  for (const auto& cand : oracle.candidates)
    if (cand.m_stationary) m_points.push_back(cand.x);
  REQUIRE(m_points.size() == 3);
  auto has_point = [&](const Vec& p) {
    for (const auto& q : m_points)
      if (inf_norm(p - q) <= 1e-5) return true;
    return false;
  };
  CHECK(has_point(vec({0, 0, 2})));
  CHECK(has_point(vec({0, 1, 0})));
  CHECK(has_point(vec({0, 0, 0})));

  for (const auto& cand : oracle.candidates)
    if (cand.m_stationary) CHECK(cand.m_residual <= 1e-6);
}

TEST_CASE("oracle finds the strict global minimum of the disk problem") {
  Problem disk = builtin("disk2d");
  OracleResult oracle = brute_force_solve(disk);
  CHECK(approx_equal(oracle.best_x, vec({0, 0}), 1e-6));
  CHECK(oracle.best_f == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("oracle matches the per-support normal-equation oracle on least squares") {
  SplitMix64 rng(99);
  const int n = 6;
  const int rows = 12;
  Mat a(rows, n);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.next_gaussian();
  Vec x_true = Vec::Zero(n);
  x_true(1) = 1.3;
  x_true(4) = -0.8;
  Vec b = a * x_true + 0.01 * rng.gaussian_vector(rows);

  // Quadratic form of |Ax - b|^2 up to the constant b'b.
  Problem problem = make_quadratic_problem(2, 2.0 * a.transpose() * a,
                                           Vec(-2.0 * a.transpose() * b), Mat(0, n), Vec(0),
                                           Mat(0, n), Vec(0), "lsq");

  double closed_form_best = std::numeric_limits<double>::infinity();
  for (const IndexSet& support : enumerate_supports(n, 2)) {
    if (support.empty()) {
      closed_form_best = std::min(closed_form_best, 0.0);
      continue;
    }
    Mat as(rows, support.size());
    for (size_t k = 0; k < support.size(); ++k) as.col(k) = a.col(support[k]);
    Vec xs = (as.transpose() * as).ldlt().solve(as.transpose() * b);
    double f = (as * xs - b).squaredNorm() - b.squaredNorm();
    closed_form_best = std::min(closed_form_best, f);
  }

  OracleResult oracle = brute_force_solve(problem);
  CHECK(oracle.best_f == Catch::Approx(closed_form_best).margin(1e-6));
}

TEST_CASE("m_points_in_ball isolates candidates by radius") {
  Problem dist = builtin("dist3d");
  std::vector<Vec> near_global = m_points_in_ball(dist, vec({0, 0, 2}), 0.5);
  REQUIRE(near_global.size() == 1);
  CHECK(approx_equal(near_global[0], vec({0, 0, 2}), 1e-6));

  CHECK(m_points_in_ball(dist, vec({0, 0, 0}), 10.0).size() == 3);
  CHECK(m_points_in_ball(dist, vec({5, 5, 5}), 0.0).empty());
}

TEST_CASE("oracle runs are deterministic") {
  Problem problem = builtin("sparse_lsq", {5, 2, 21});
  OracleResult a = brute_force_solve(problem, {3, 17});
  OracleResult b = brute_force_solve(problem, {3, 17});
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(a.candidates[i].support == b.candidates[i].support);
    CHECK(inf_norm(a.candidates[i].x - b.candidates[i].x) == 0.0);
    CHECK(a.candidates[i].f == b.candidates[i].f);
  }
}

TEST_CASE("portfolio oracle candidates stay on the budget hyperplane") {
  Problem port = builtin("portfolio", {5, 2, 3});
  OracleResult oracle = brute_force_solve(port);
  int converged = 0;
  for (const auto& cand : oracle.candidates) {
    if (cand.status != NlpStatus::Converged) continue;
    ++converged;
    CHECK(std::abs(cand.x.sum() - 1.0) <= 1e-8);
  }
  CHECK(converged > 0);
  CHECK(oracle.best_f < std::numeric_limits<double>::infinity());
}
