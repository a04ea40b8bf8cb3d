#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "cardopt/cardopt.hpp"
#include "support/schema_check.hpp"
#include "support/test_util.hpp"

using namespace cardopt;
using cardopt::testing::load_schema;
using cardopt::testing::validates;
using cardopt::testing::vec;

TEST_CASE("certificates validate against the published schema") {
  Problem dist = builtin("dist3d");
  Vec x = vec({0, 0, 2});
  StationarityCertificate cert = certify_m_stationary(dist, x);
  CqReport cq = check_constraint_qualifications(dist, x);
  json doc = certificate_to_json(cert, cq);
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("certificate.schema.json"), &error));

  CHECK(doc["kind"] == "M");
  CHECK(doc["cpld"] == "not decidable pointwise");
}

TEST_CASE("the MFCQ witness serializes when the qualification fails") {
  Problem problem;
  problem.n = 2;
  problem.kappa = 1;
  problem.m = 2;
  problem.p = 0;
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

  Vec x = vec({0, 1});
  StationarityCertificate cert = certify_m_stationary(problem, x);
  CqReport cq = check_constraint_qualifications(problem, x);
  REQUIRE_FALSE(cq.cc_mfcq);
  json doc = certificate_to_json(cert, cq);
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("certificate.schema.json"), &error));
  CHECK(doc.contains("cc_mfcq_witness"));
}

TEST_CASE("second-order verdicts validate against the published schema") {
  Problem disk = builtin("disk2d");
  PrimalPair pair{vec({0, 0}), vec({1, 0})};
  SecondOrderVerdict verdict = check_cc_sosc(disk, pair, MultiplierMode::Exists);
  json doc = to_json(verdict, 0x5EED);
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("second_order.schema.json"), &error));
}

TEST_CASE("path records validate line by line") {
  Problem disk = builtin("disk2d");
  RegularizationPath path = solve_path(disk, vec({0.3, 0.3}));
  std::string lines = path_to_json_lines(path, 0);
  std::istringstream stream(lines);
  std::string line;
  json entry_schema = load_schema("path_entry.schema.json");
  json final_schema = load_schema("path_final.schema.json");
  json cert_schema = load_schema("certificate.schema.json");
  int count = 0;
  std::string error;
  while (std::getline(stream, line)) {
    json doc = json::parse(line);
    ++count;
    INFO("line " << count << ": " << error);
    if (doc.contains("final")) {
      REQUIRE(validates(doc, final_schema, &error));
      REQUIRE(validates(doc["certificate"], cert_schema, &error));
    } else {
      REQUIRE(validates(doc, entry_schema, &error));
    }
  }
  CHECK(count == static_cast<int>(path.entries.size()) + 1);
}

TEST_CASE("oracle results validate against the published schema") {
  Problem dist = builtin("dist3d");
  OracleResult oracle = brute_force_solve(dist);
  json doc = to_json(oracle, 0);
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("oracle.schema.json"), &error));
}

TEST_CASE("derivative reports validate against the published schema") {
  Problem port = builtin("portfolio", {5, 2, 3});
  SplitMix64 rng(1);
  json doc = to_json(check_derivatives(port, rng.gaussian_vector(5)));
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("derivative_report.schema.json"), &error));
}

TEST_CASE("problem documents validate against the published schema") {
  json doc = to_json(BuiltinRef{"sparse_lsq", {6, 2, 7}});
  std::string error;
  INFO(error);
  CHECK(validates(doc, load_schema("problem.schema.json"), &error));

  QuadraticData data;
  data.n = 2;
  data.kappa = 1;
  data.q = Mat::Identity(2, 2);
  data.c = vec({0, 0});
  data.a_ineq = Mat(0, 2);
  data.b_ineq = Vec(0);
  data.a_eq = Mat(0, 2);
  data.b_eq = Vec(0);
  CHECK(validates(to_json(ProblemSpec{data}), load_schema("problem.schema.json"), &error));
}

TEST_CASE("the schema validator rejects malformed documents") {
  json schema = load_schema("path_entry.schema.json");
  json bad = {{"t", "not-a-number"}};
  std::string error;
  CHECK_FALSE(validates(bad, schema, &error));
  CHECK(!error.empty());
}
