#include <catch2/catch_amalgamated.hpp>

#include "cardopt/problems.hpp"
#include "cardopt/reformulation.hpp"
#include "support/test_util.hpp"

using namespace cardopt;
using cardopt::testing::approx_equal;
using cardopt::testing::vec;

TEST_CASE("index sets at the disk solution") {
  Problem problem = builtin("disk2d");
  IndexSets sets = index_sets(problem, {vec({0, 0}), vec({1, 0})});
  CHECK(sets.I_g.empty());
  CHECK(sets.I_0 == IndexSet{0, 1});
  CHECK(sets.I_01 == IndexSet{0});
  CHECK(sets.I_00 == IndexSet{1});
  CHECK(sets.I_pm0.empty());
  CHECK(sets.I_0plus.empty());
  CHECK(sets.card_active);
}

TEST_CASE("index sets at the distance toy global minimum") {
  Problem problem = builtin("dist3d");
  IndexSets sets = index_sets(problem, {vec({0, 0, 2}), vec({1, 1, 0})});
  CHECK(sets.I_pm0 == IndexSet{2});
  CHECK(sets.I_01 == IndexSet{0, 1});
  CHECK(sets.I_00.empty());
  CHECK(sets.I_0plus.empty());
  CHECK(sets.card_active);
}

TEST_CASE("cardinality row inactive at the all-ones completion of the origin") {
  Problem problem = builtin("dist3d");
  IndexSets sets = index_sets(problem, {vec({0, 0, 0}), vec({1, 1, 1})});
  CHECK(sets.I_01 == IndexSet{0, 1, 2});
  CHECK_FALSE(sets.card_active);
}

TEST_CASE("index sets reject y outside the unit box") {
  Problem problem = builtin("disk2d");
  CHECK_THROWS_AS(index_sets(problem, {vec({0, 0}), vec({1.5, 0})}), ClassificationError);
}

TEST_CASE("feasibility for the original problem") {
  Problem dist = builtin("dist3d");
  CHECK(is_feasible_original(dist, vec({0, 0, 2})));
  CHECK_FALSE(is_feasible_original(dist, vec({0, 1, 2})));
  Problem disk = builtin("disk2d");
  CHECK(is_feasible_original(disk, vec({0, 0.5})));
  CHECK_FALSE(is_feasible_original(disk, vec({0, 1.5})));
}

TEST_CASE("feasibility for the reformulation") {
  Problem disk = builtin("disk2d");
  CHECK(is_feasible_reformulation(disk, {vec({0, 0}), vec({1, 0})}));
  CHECK_FALSE(is_feasible_reformulation(disk, {vec({1, 0}), vec({1, 0})}));
  CHECK_FALSE(is_feasible_reformulation(disk, {vec({0, 0}), vec({0.4, 0.4})}));
}

TEST_CASE("complete_y uses the all-ones completion") {
  Problem dist = builtin("dist3d");
  CHECK(approx_equal(complete_y(dist, vec({0, 0, 2})), vec({1, 1, 0})));
  CHECK(approx_equal(complete_y(dist, vec({0, 0, 0})), vec({1, 1, 1})));
  CHECK_THROWS_AS(complete_y(dist, vec({0, 1, 2})), InfeasibleInput);
}

TEST_CASE("completion of a feasible point is feasible for the reformulation") {
  Problem problem = builtin("sparse_lsq", {7, 3, 5});
  SplitMix64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x = Vec::Zero(problem.n);
    int nnz = static_cast<int>(rng.next_u64() % (problem.kappa + 1));
    for (int k = 0; k < nnz; ++k)
      x(static_cast<int>(rng.next_u64() % problem.n)) = rng.next_gaussian();
    REQUIRE(is_feasible_original(problem, x));
    Vec y = complete_y(problem, x);
    CHECK(is_feasible_reformulation(problem, {x, y}));
    CHECK(y.sum() >= static_cast<double>(problem.n - problem.kappa));
  }
}

TEST_CASE("index sets partition the coordinate range") {
  Problem problem = builtin("sparse_lsq", {6, 2, 9});
  SplitMix64 rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x = Vec::Zero(problem.n);
    int nnz = static_cast<int>(rng.next_u64() % (problem.kappa + 1));
    for (int k = 0; k < nnz; ++k)
      x(static_cast<int>(rng.next_u64() % problem.n)) = 1.0 + rng.next_uniform();
    Vec y(problem.n);
    for (int i = 0; i < problem.n; ++i) {
      if (std::abs(x(i)) > 0.0) {
        y(i) = 0.0;
      } else {
        double u = rng.next_uniform();
        y(i) = u < 0.25 ? 0.0 : (u < 0.5 ? 1.0 : rng.next_uniform());
      }
    }
    IndexSets sets = index_sets(problem, {x, y});
    IndexSet all = sets.I_pm0;
    all.insert(all.end(), sets.I_00.begin(), sets.I_00.end());
    all.insert(all.end(), sets.I_0plus.begin(), sets.I_0plus.end());
    all.insert(all.end(), sets.I_01.begin(), sets.I_01.end());
    std::sort(all.begin(), all.end());
    IndexSet expected(problem.n);
    for (int i = 0; i < problem.n; ++i) expected[i] = i;
    REQUIRE(all == expected);

    IndexSet zero_union = sets.I_00;
    zero_union.insert(zero_union.end(), sets.I_0plus.begin(), sets.I_0plus.end());
    zero_union.insert(zero_union.end(), sets.I_01.begin(), sets.I_01.end());
    std::sort(zero_union.begin(), zero_union.end());
    REQUIRE(zero_union == sets.I_0);
  }
}

TEST_CASE("shrinking the activity tolerance never enlarges I_g") {
  Problem disk = builtin("disk2d");
  SplitMix64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    double r = 1.0 - 1e-7 * rng.next_uniform();
    Vec x = vec({r, 0.0});
    Tolerances loose;
    loose.act_tol = 1e-4;
    Tolerances tight;
    tight.act_tol = 1e-9;
    IndexSets coarse = index_sets(disk, {x, vec({0, 1})}, loose);
    IndexSets fine = index_sets(disk, {x, vec({0, 1})}, tight);
    for (int i : fine.I_g) CHECK(contains(coarse.I_g, i));
  }
}
