#include <catch2/catch_amalgamated.hpp>

#include "cardopt/problems.hpp"
#include "cardopt/stationarity.hpp"
#include "support/test_util.hpp"

using namespace cardopt;
using cardopt::testing::approx_equal;
using cardopt::testing::vec;

TEST_CASE("origin of the distance toy is M-stationary with gamma = -grad f") {
  Problem problem = builtin("dist3d");
  StationarityCertificate cert = certify_m_stationary(problem, vec({0, 0, 0}));
  CHECK(cert.kind == StationarityKind::M);
  CHECK(cert.residual <= 1e-12);
  REQUIRE(cert.multipliers.has_value());
  CHECK(approx_equal(cert.multipliers->gamma, vec({0, 2, 4})));
  CHECK(cert.unique_multiplier == TriState::Yes);
}

TEST_CASE("disk center is M-stationary with all multipliers zero") {
  Problem problem = builtin("disk2d");
  StationarityCertificate cert = certify_m_stationary(problem, vec({0, 0}));
  CHECK(cert.kind == StationarityKind::M);
  CHECK(cert.residual <= 1e-12);
  REQUIRE(cert.multipliers.has_value());
  CHECK(inf_norm(cert.multipliers->lambda) <= 1e-12);
  CHECK(inf_norm(cert.multipliers->gamma) <= 1e-12);
}

TEST_CASE("a feasible non-stationary point is rejected with the projection residual") {
  Problem problem = builtin("dist3d");
  StationarityCertificate cert = certify_m_stationary(problem, vec({0, 0, 1}));
  CHECK(cert.kind == StationarityKind::None);
  CHECK(cert.residual == Catch::Approx(2.0));
}

TEST_CASE("certify_m rejects infeasible input") {
  Problem problem = builtin("dist3d");
  CHECK_THROWS_AS(certify_m_stationary(problem, vec({0, 1, 2})), InfeasibleInput);
}

TEST_CASE("disk solution is S-stationary") {
  Problem problem = builtin("disk2d");
  StationarityCertificate cert = certify_s_stationary(problem, {vec({0, 0}), vec({1, 0})});
  CHECK(cert.kind == StationarityKind::S);
  CHECK(cert.residual <= 1e-12);
  REQUIRE(cert.multipliers.has_value());
  CHECK(inf_norm(cert.multipliers->lambda) <= 1e-12);
  CHECK(inf_norm(cert.multipliers->gamma) <= 1e-12);
}

TEST_CASE("S-certificate at the origin depends on the completion") {
  Problem problem = builtin("dist3d");
  // All-ones completion: I_00 empty, S and M coincide.
  StationarityCertificate s1 =
      certify_s_stationary(problem, {vec({0, 0, 0}), vec({1, 1, 1})});
  CHECK(s1.kind == StationarityKind::S);
  REQUIRE(s1.multipliers.has_value());
  CHECK(approx_equal(s1.multipliers->gamma, vec({0, 2, 4})));

  // Completion with y_3 = 0 puts 3 into I_00 and forces gamma_3 = 0.
  StationarityCertificate s2 =
      certify_s_stationary(problem, {vec({0, 0, 0}), vec({1, 1, 0})});
  CHECK(s2.kind == StationarityKind::None);
  CHECK(s2.residual == Catch::Approx(4.0));
}

TEST_CASE("S-certificate success implies M-certificate success") {
  Problem problem = builtin("disk2d");
  PrimalPair pair{vec({0, 0}), vec({1, 0})};
  StationarityCertificate s = certify_s_stationary(problem, pair);
  StationarityCertificate m = certify_m_stationary(problem, pair.x);
  REQUIRE(s.kind == StationarityKind::S);
  CHECK(m.kind == StationarityKind::M);
  CHECK(m.residual <= s.residual + 1e-12);
}

TEST_CASE("M-certification is independent of the completion") {
  Problem problem = builtin("sparse_lsq", {6, 3, 13});
  Vec x = Vec::Zero(6);
  // Two distinct feasible completions of the same x.
  Vec y1 = Vec::Ones(6);
  Vec y2 = Vec::Ones(6);
  y2(0) = 0.0;
  REQUIRE(is_feasible_reformulation(problem, {x, y1}));
  REQUIRE(is_feasible_reformulation(problem, {x, y2}));
  StationarityCertificate m1 = certify_m_stationary(problem, x);
  StationarityCertificate m2 = certify_m_stationary(problem, x);
  CHECK(m1.kind == m2.kind);
  CHECK(m1.residual == m2.residual);
}

TEST_CASE("CC-LICQ holds at the example points") {
  Problem disk = builtin("disk2d");
  auto [licq_disk, sigma_disk] = check_cc_licq(disk, vec({0, 0}));
  CHECK(licq_disk);
  CHECK(sigma_disk == Catch::Approx(1.0));

  Problem dist = builtin("dist3d");
  auto [licq_dist, sigma_dist] = check_cc_licq(dist, vec({0, 0, 2}));
  CHECK(licq_dist);
  CHECK(sigma_dist == Catch::Approx(1.0));
}

namespace {

/// n = 2, kappa = 1 toy with the duplicated constraint pair g = (x1, -x1).
Problem duplicated_direction_problem() {
  Problem problem;
  problem.n = 2;
  problem.kappa = 1;
  problem.m = 2;
  problem.p = 0;
  problem.name = "duplicated_direction";
  problem.f = [](const Vec& x) { return x(1); };
  problem.grad_f = [](const Vec&) { return Vec(vec({0, 1})); };
  problem.hess_f = [](const Vec&) { return Mat::Zero(2, 2); };
  problem.g = [](const Vec& x) -> Vec { return vec({x(0), -x(0)}); };
  problem.jac_g = [](const Vec&) -> Mat {
    Mat j(2, 2);
    j << 1, 0, -1, 0;
    return j;
  };
  problem.hess_g = [](const Vec&, int) { return Mat::Zero(2, 2); };
  return problem;
}

}  // namespace

TEST_CASE("duplicated gradient directions break CC-LICQ and CC-MFCQ") {
  Problem problem = duplicated_direction_problem();
  Vec x = vec({0, 1});
  auto [licq, sigma] = check_cc_licq(problem, x);
  CHECK_FALSE(licq);

  auto [mfcq, witness] = check_cc_mfcq(problem, x);
  CHECK_FALSE(mfcq);
  REQUIRE(witness.has_value());
  // The witness must be a valid nontrivial vanishing combination.
  Vec combo = witness->lambda(0) * vec({1, 0}) + witness->lambda(1) * vec({-1, 0}) +
              witness->gamma(0) * vec({1, 0});
  CHECK(inf_norm(combo) <= 1e-9);
  double l1 = witness->lambda.cwiseAbs().sum() + witness->gamma.cwiseAbs().sum();
  CHECK(l1 == Catch::Approx(1.0));
  CHECK(witness->lambda.minCoeff() >= 0.0);
}

TEST_CASE("CC-MFCQ holds where CC-LICQ holds") {
  Problem disk = builtin("disk2d");
  auto [mfcq, witness] = check_cc_mfcq(disk, vec({0, 0}));
  CHECK(mfcq);
  CHECK_FALSE(witness.has_value());

  Problem dist = builtin("dist3d");
  CHECK(check_cc_mfcq(dist, vec({0, 0, 0})).first);
}

TEST_CASE("multiplier vertices collapse to one under CC-LICQ") {
  Problem disk = builtin("disk2d");
  MultiplierVertexSet set =
      multiplier_set_vertices(disk, {vec({0, 0}), vec({1, 0})}, StationarityKind::S);
  REQUIRE(set.vertices.size() == 1);
  CHECK(inf_norm(set.vertices[0].lambda) <= 1e-12);
  CHECK(inf_norm(set.vertices[0].gamma) <= 1e-12);
  CHECK_FALSE(set.unbounded);

  Problem dist = builtin("dist3d");
  Vec x = vec({0, 0, 2});
  MultiplierVertexSet mset =
      multiplier_set_vertices(dist, {x, complete_y(dist, x)}, StationarityKind::M);
  REQUIRE(mset.vertices.size() == 1);
  CHECK(approx_equal(mset.vertices[0].gamma, vec({0, 2, 0})));
}

namespace {

/// KKT point with a duplicated active constraint: multiplier segment in lambda.
Problem duplicated_constraint_problem() {
  Problem problem;
  problem.n = 2;
  problem.kappa = 1;
  problem.m = 2;
  problem.p = 0;
  problem.name = "duplicated_constraint";
  problem.f = [](const Vec& x) { return (x(0) - 2.0) * (x(0) - 2.0); };
  problem.grad_f = [](const Vec& x) { return Vec(vec({2.0 * (x(0) - 2.0), 0.0})); };
  problem.hess_f = [](const Vec&) {
    Mat h(2, 2);
    h << 2, 0, 0, 0;
    return h;
  };
  problem.g = [](const Vec& x) -> Vec { return vec({x(0) - 1.0, x(0) - 1.0}); };
  problem.jac_g = [](const Vec&) -> Mat {
    Mat j(2, 2);
    j << 1, 0, 1, 0;
    return j;
  };
  problem.hess_g = [](const Vec&, int) { return Mat::Zero(2, 2); };
  return problem;
}

}  // namespace

TEST_CASE("a duplicated active constraint yields a two-vertex multiplier segment") {
  Problem problem = duplicated_constraint_problem();
  Vec x = vec({1, 0});
  StationarityCertificate cert = certify_m_stationary(problem, x);
  REQUIRE(cert.kind == StationarityKind::M);
  CHECK(cert.unique_multiplier == TriState::No);

  MultiplierVertexSet set =
      multiplier_set_vertices(problem, {x, complete_y(problem, x)}, StationarityKind::M);
  REQUIRE(set.vertices.size() == 2);
  // Vertices of the segment lambda_1 + lambda_2 = 2, lambda >= 0.
  std::vector<Vec> lambdas = {set.vertices[0].lambda, set.vertices[1].lambda};
  std::sort(lambdas.begin(), lambdas.end(), [](const Vec& a, const Vec& b) { return a(0) < b(0); });
  CHECK(approx_equal(lambdas[0], vec({0, 2})));
  CHECK(approx_equal(lambdas[1], vec({2, 0})));
  CHECK_FALSE(set.unbounded);
}

TEST_CASE("CC-LICQ implies CC-MFCQ at every sampled feasible point") {
  SplitMix64 rng(55);
  for (const char* name : {"dist3d", "portfolio"}) {
    Problem problem = builtin(name, {5, 2, 3});
    int tested = 0;
    for (int trial = 0; trial < 200; ++trial) {
      Vec x = Vec::Zero(problem.n);
      int nnz = 1 + static_cast<int>(rng.next_u64() % problem.kappa);
      for (int k = 0; k < nnz; ++k)
        x(static_cast<int>(rng.next_u64() % problem.n)) = 0.1 + rng.next_uniform();
      if (problem.p > 0) x /= x.sum();  // portfolio budget row
      if (!is_feasible_original(problem, x)) continue;
      ++tested;
      if (check_cc_licq(problem, x).first) CHECK(check_cc_mfcq(problem, x).first);
    }
    CHECK(tested > 20);
  }
}

TEST_CASE("gamma vanishes at a minimum with inactive cardinality bound under CC-LICQ") {
  // Noise-free sparse recovery with a 1-sparse truth and kappa = 2: the
  // global minimum has ||x||_0 < kappa and grad f = 0 there.
  SplitMix64 rng(77);
  const int n = 5;
  Mat a(8, n);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.next_gaussian();
  Vec x_true = Vec::Zero(n);
  x_true(2) = 1.5;
  Vec b = a * x_true;
  Problem problem = make_quadratic_problem(2, 2.0 * a.transpose() * a,
                                           Vec(-2.0 * a.transpose() * b), Mat(0, n), Vec(0),
                                           Mat(0, n), Vec(0), "lsq_recovery");
  REQUIRE(check_cc_licq(problem, x_true).first);
  StationarityCertificate cert = certify_m_stationary(problem, x_true);
  REQUIRE(cert.kind == StationarityKind::M);
  CHECK(inf_norm(cert.multipliers->gamma) <= 1e-9);
}
