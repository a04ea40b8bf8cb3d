#pragma once

#include "cardopt/nlp.hpp"
#include "cardopt/stationarity.hpp"

namespace cardopt {

struct OracleCandidate {
  IndexSet support;
  Vec x;
  double f = 0.0;
  double m_residual = 0.0;
  bool m_stationary = false;
  NlpStatus status = NlpStatus::IterationLimit;
};

/// Brute-force ground truth over all supports of size <= kappa.
struct OracleResult {
  Vec best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<OracleCandidate> candidates;
  long enumerated_supports = 0;
};

struct OracleOptions {
  int starts_per_support = 3;
  std::uint64_t seed = 0;
  double dedup_tol = 1e-6;     ///< inf-norm distance collapsing duplicates
  long support_cap = 1000000;  ///< enumeration limit
};

/// All subsets of {0..n-1} with at most kappa elements, ordered by size then
/// lexicographically. Throws EnumerationLimit when the count exceeds the cap.
inline std::vector<IndexSet> enumerate_supports(int n, int kappa, long cap = 1000000) {
  if (!(kappa > 0 && kappa < n))
    throw EnumerationLimit("enumerate_supports: requires 0 < kappa < n");
  double count = 1.0;
  double binom = 1.0;
  for (int s = 1; s <= kappa; ++s) {
    binom *= static_cast<double>(n - s + 1) / s;
    count += binom;
    if (count > static_cast<double>(cap))
      throw EnumerationLimit("enumerate_supports: support count exceeds cap");
  }

  std::vector<IndexSet> supports;
  supports.reserve(static_cast<size_t>(count));
  supports.push_back({});
  std::vector<int> pick;
  std::function<void(int, int)> rec = [&](int start, int remaining) {
    if (remaining == 0) {
      supports.push_back(IndexSet(pick.begin(), pick.end()));
      return;
    }
    for (int i = start; i <= n - remaining; ++i) {
      pick.push_back(i);
      rec(i + 1, remaining - 1);
      pick.pop_back();
    }
  };
  for (int size = 1; size <= kappa; ++size) rec(0, size);
  return supports;
}

/// Solves the restricted NLP on every support from multiple seeded starts,
/// deduplicates the converged points, certifies each for M-stationarity, and
/// reports the feasible candidate of least objective value. Supports smaller
/// than kappa are included: a point can be M-stationary with the cardinality
/// constraint inactive.
inline OracleResult brute_force_solve(const Problem& problem, const OracleOptions& oopts = {},
                                      const NlpOptions& nopts = {}, const Tolerances& tols = {}) {
  validate(problem);
  std::vector<IndexSet> supports =
      enumerate_supports(problem.n, problem.kappa, oopts.support_cap);

  OracleResult result;
  result.enumerated_supports = static_cast<long>(supports.size());
  SplitMix64 rng(oopts.seed);

  for (const IndexSet& support : supports) {
    const int tries = support.empty() ? 1 : oopts.starts_per_support;
    for (int attempt = 0; attempt < tries; ++attempt) {
      Vec start = Vec::Zero(problem.n);
      for (int i : support) start(i) = rng.next_gaussian();
      NlpResult solved = solve_restricted(problem, support, start, nopts);
      if (solved.status != NlpStatus::Converged) {
        OracleCandidate failed;
        failed.support = support;
        failed.x = solved.z;
        failed.f = problem.f(solved.z);
        failed.status = solved.status;
        bool known = false;
        for (const auto& c : result.candidates)
          if (c.status != NlpStatus::Converged && c.support == support) known = true;
        if (!known) result.candidates.push_back(failed);
        continue;
      }
      bool duplicate = false;
      for (const auto& c : result.candidates) {
        if (c.status == NlpStatus::Converged && inf_norm(c.x - solved.z) <= oopts.dedup_tol) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;

      OracleCandidate cand;
      cand.support = support;
      cand.x = solved.z;
      cand.f = problem.f(solved.z);
      cand.status = solved.status;
      if (is_feasible_original(problem, cand.x, tols)) {
        StationarityCertificate cert = certify_m_stationary(problem, cand.x, tols);
        cand.m_residual = cert.residual;
        cand.m_stationary = cert.kind == StationarityKind::M;
        if (cand.f < result.best_f) {
          result.best_f = cand.f;
          result.best_x = cand.x;
        }
      }
      result.candidates.push_back(cand);
    }
  }
  return result;
}

/// All deduplicated M-stationary oracle candidates inside the closed
/// Euclidean ball around the center.
inline std::vector<Vec> m_points_in_ball(const Problem& problem, const Vec& center, double radius,
                                         const OracleOptions& oopts = {},
                                         const NlpOptions& nopts = {}, const Tolerances& tols = {}) {
  OracleResult oracle = brute_force_solve(problem, oopts, nopts, tols);
  std::vector<Vec> points;
  for (const auto& cand : oracle.candidates) {
    if (cand.status == NlpStatus::Converged && cand.m_stationary &&
        (cand.x - center).norm() <= radius)
      points.push_back(cand.x);
  }
  return points;
}

}  // namespace cardopt
