#pragma once

#include <json.hpp>

#include "cardopt/oracle.hpp"
#include "cardopt/problem.hpp"
#include "cardopt/scholtes.hpp"
#include "cardopt/secondorder.hpp"

namespace cardopt {

using json = nlohmann::json;

inline json to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i) == 0.0 ? 0.0 : v(i));
  return arr;
}

inline json to_json(const IndexSet& s) {
  json arr = json::array();
  for (int i : s) arr.push_back(i);
  return arr;
}

inline std::string to_string(StationarityKind kind) {
  switch (kind) {
    case StationarityKind::S: return "S";
    case StationarityKind::M: return "M";
    default: return "none";
  }
}

inline std::string to_string(TriState t) {
  switch (t) {
    case TriState::Yes: return "yes";
    case TriState::No: return "no";
    default: return "unknown";
  }
}

inline std::string to_string(NlpStatus status) {
  switch (status) {
    case NlpStatus::Converged: return "converged";
    case NlpStatus::IterationLimit: return "iteration_limit";
    default: return "infeasible_stall";
  }
}

inline std::string to_string(SecondOrderStatus status) {
  switch (status) {
    case SecondOrderStatus::Certified: return "certified";
    case SecondOrderStatus::Falsified: return "falsified";
    default: return "inconclusive";
  }
}

inline std::string to_string(MultiplierMode mode) {
  return mode == MultiplierMode::Exists ? "exists" : "forall";
}

/// Flat certificate document: stationarity kind, multipliers, and the
/// constraint-qualification report. CC-CPLD is a neighborhood property, so
/// the report only carries the fixed "not decidable pointwise" note.
inline json certificate_to_json(const StationarityCertificate& cert, const CqReport& cq) {
  json doc;
  doc["kind"] = to_string(cert.kind);
  doc["residual"] = cert.residual;
  if (cert.multipliers) {
    doc["lambda"] = to_json(cert.multipliers->lambda);
    doc["mu"] = to_json(cert.multipliers->mu);
    doc["gamma"] = to_json(cert.multipliers->gamma);
  } else {
    doc["lambda"] = json::array();
    doc["mu"] = json::array();
    doc["gamma"] = json::array();
  }
  doc["unique_multiplier"] = to_string(cert.unique_multiplier);
  doc["cc_licq"] = cq.cc_licq;
  doc["sigma_min"] = cq.sigma_min;
  doc["cc_mfcq"] = cq.cc_mfcq;
  if (cq.mfcq_witness) {
    json witness;
    witness["lambda"] = to_json(cq.mfcq_witness->lambda);
    witness["mu"] = to_json(cq.mfcq_witness->mu);
    witness["gamma"] = to_json(cq.mfcq_witness->gamma);
    doc["cc_mfcq_witness"] = witness;
  }
  doc["cpld"] = "not decidable pointwise";
  return doc;
}

inline json to_json(const SecondOrderVerdict& verdict, std::uint64_t seed) {
  json doc;
  doc["status"] = to_string(verdict.status);
  doc["multiplier_mode"] = to_string(verdict.multiplier_mode);
  doc["seed"] = seed;
  doc["multiplier_set_unbounded"] = verdict.multiplier_set_unbounded;
  doc["multiplier_set_has_lines"] = verdict.multiplier_set_has_lines;
  if (verdict.witness) {
    doc["witness"] = to_json(*verdict.witness);
    doc["witness_value"] = verdict.witness_value;
  }
  json branches = json::array();
  for (const auto& report : verdict.branch_reports) {
    json b;
    b["zero_set"] = to_json(report.zero_set);
    b["subspace_dim"] = report.subspace_dim;
    b["min_eigenvalue"] = report.min_eigenvalue;
    b["passed"] = report.passed;
    branches.push_back(b);
  }
  doc["branches"] = branches;
  return doc;
}

inline json to_json(const PathEntry& entry) {
  json doc;
  doc["t"] = entry.t;
  doc["x"] = to_json(entry.x);
  doc["y"] = to_json(entry.y);
  doc["kkt_residual"] = entry.kkt_residual;
  doc["comp_violation"] = entry.comp_violation;
  doc["solver_status"] = to_string(entry.solver_status);
  return doc;
}

/// Final record of the path stream: the rounded point with its certificates.
inline json path_final_to_json(const RegularizationPath& path, std::uint64_t seed) {
  json doc;
  doc["final"] = true;
  doc["converged"] = path.converged;
  doc["seed"] = seed;
  doc["x"] = to_json(path.final_point.x);
  doc["y"] = to_json(path.final_point.y);
  doc["f"] = path.final_f;
  if (path.converged) {
    doc["certificate"] = certificate_to_json(path.final_certificate, path.cq_report);
    doc["m_kind"] = to_string(path.m_certificate.kind);
    doc["m_residual"] = path.m_certificate.residual;
  }
  return doc;
}

/// Serializes the whole path as JSON lines: one record per parameter value,
/// then the final record.
inline std::string path_to_json_lines(const RegularizationPath& path, std::uint64_t seed) {
  std::string out;
  for (const auto& entry : path.entries) {
    out += to_json(entry).dump();
    out += "\n";
  }
  out += path_final_to_json(path, seed).dump();
  out += "\n";
  return out;
}

inline json to_json(const OracleResult& result, std::uint64_t seed) {
  json doc;
  doc["seed"] = seed;
  doc["enumerated_supports"] = result.enumerated_supports;
  if (result.best_x.size() > 0) {
    doc["best_x"] = to_json(result.best_x);
    doc["best_f"] = result.best_f;
  }
  json candidates = json::array();
  for (const auto& cand : result.candidates) {
    json c;
    c["support"] = to_json(cand.support);
    c["x"] = to_json(cand.x);
    c["f"] = cand.f;
    c["m_residual"] = cand.m_residual;
    c["m_stationary"] = cand.m_stationary;
    c["status"] = to_string(cand.status);
    candidates.push_back(c);
  }
  doc["candidates"] = candidates;
  return doc;
}

inline json to_json(const DerivativeReport& report) {
  json doc;
  doc["pass"] = report.pass;
  doc["max_rel_error"] = report.max_rel_error();
  json blocks = json::array();
  for (const auto& block : report.blocks) {
    json b;
    b["block"] = block.block;
    b["max_rel_error"] = block.max_rel_error;
    b["pass"] = block.pass;
    blocks.push_back(b);
  }
  doc["blocks"] = blocks;
  return doc;
}

}  // namespace cardopt
