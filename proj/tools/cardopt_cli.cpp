// Command-line front end: solve, certify, second-order, oracle and
// check-derivatives runs with machine-readable JSON reports.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cardopt/cardopt.hpp"

namespace {

using namespace cardopt;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitResource = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitPrecondition = 4;

struct ProblemOpts {
  std::string builtin_name;
  std::string file;
  int n = 6;
  int kappa = 2;
  std::uint64_t problem_seed = 1;
  double noise = 0.01;
  double rho = 1.0;
};

void add_problem_options(CLI::App* cmd, ProblemOpts& opts) {
  auto* builtin_opt = cmd->add_option("--builtin", opts.builtin_name,
                                      "built-in problem: disk2d | dist3d | sparse_lsq | portfolio");
  auto* file_opt = cmd->add_option("--problem", opts.file, "problem JSON file");
  builtin_opt->excludes(file_opt);
  cmd->add_option("--n", opts.n, "dimension of generated problems");
  cmd->add_option("--kappa", opts.kappa, "cardinality bound of generated problems");
  cmd->add_option("--problem-seed", opts.problem_seed, "seed of generated problems");
  cmd->add_option("--noise", opts.noise, "sparse_lsq noise scale");
  cmd->add_option("--rho", opts.rho, "portfolio risk/return trade-off");
}

Problem make_problem_from_opts(const ProblemOpts& opts) {
  if (!opts.file.empty()) return load(opts.file);
  if (opts.builtin_name.empty())
    throw ParseError("problem", "one of --builtin or --problem is required");
  BuiltinParams params;
  params.n = opts.n;
  params.kappa = opts.kappa;
  params.seed = opts.problem_seed;
  params.noise = opts.noise;
  params.rho = opts.rho;
  return builtin(opts.builtin_name, params);
}

Vec parse_csv_vector(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(token, &used));
    } catch (const std::exception&) {
      throw ParseError(flag, "expected comma-separated numbers");
    }
  }
  Vec v(values.size());
  for (size_t i = 0; i < values.size(); ++i) v(i) = values[i];
  return v;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ParseError(out_path, "cannot open for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

/// Expands --config FILE (a JSON object keyed by long option names) into
/// argv entries placed before the explicit flags, so the command line wins.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args) {
  std::string config_path;
  std::vector<std::string> rest;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ParseError("--config", "missing file argument");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  std::ifstream in(config_path);
  if (!in) throw ParseError(config_path, "cannot open config file");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(config_path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(config_path, "config must be a JSON object");

  std::vector<std::string> merged;
  if (!rest.empty()) merged.push_back(rest.front());  // subcommand name stays first
  for (const auto& [key, value] : doc.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) merged.push_back("--" + key);
      continue;
    }
    merged.push_back("--" + key);
    if (value.is_string()) {
      merged.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string csv;
      for (const auto& item : value) {
        if (!csv.empty()) csv += ",";
        csv += item.dump();
      }
      merged.push_back(csv);
    } else {
      merged.push_back(value.dump());
    }
  }
  merged.insert(merged.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
  return merged;
}

json flat_certificate(const Problem& problem, const PrimalPair& pair, const Tolerances& tols) {
  StationarityCertificate cert_s = certify_s_stationary(problem, pair, tols);
  StationarityCertificate cert_m = certify_m_stationary(problem, pair.x, tols);
  CqReport cq = check_constraint_qualifications(problem, pair.x, tols);

  const StationarityCertificate& shown = cert_s.kind == StationarityKind::S ? cert_s : cert_m;
  json doc = certificate_to_json(shown, cq);
  doc["s_residual"] = cert_s.residual;
  doc["m_residual"] = cert_m.residual;
  doc["x"] = to_json(pair.x);
  doc["y"] = to_json(pair.y);
  return doc;
}

int run(std::vector<std::string> args) {
  CLI::App app{"cardinality-constrained solver and certifier"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Tolerances tols;
  std::string out_path;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--feas-tol", tols.feas_tol, "constraint violation tolerance");
    cmd->add_option("--act-tol", tols.act_tol, "activity detection tolerance");
    cmd->add_option("--zero-tol", tols.zero_tol, "zero detection tolerance");
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--seed", seed, "seed of randomized components");
  };

  NlpOptions nopts;
  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--nlp-stat-tol", nopts.stat_tol, "NLP stationarity tolerance");
    cmd->add_option("--nlp-feas-tol", nopts.feas_tol, "NLP feasibility tolerance");
    cmd->add_option("--max-outer", nopts.max_outer, "augmented Lagrangian outer cap");
    cmd->add_option("--max-inner", nopts.max_inner, "inner iteration cap per outer step");
    cmd->add_option("--penalty-init", nopts.penalty_init, "initial penalty parameter");
  };

  auto* solve_cmd = app.add_subcommand("solve", "run the regularization path");
  ProblemOpts solve_problem;
  add_problem_options(solve_cmd, solve_problem);
  add_common(solve_cmd);
  add_solver(solve_cmd);
  PathOptions popts;
  std::string start_text;
  solve_cmd->add_option("--start", start_text, "start point x as comma-separated values");
  solve_cmd->add_option("--t0", popts.t0, "initial regularization parameter");
  solve_cmd->add_option("--sigma", popts.sigma, "reduction factor in (0,1)");
  solve_cmd->add_option("--t-min", popts.t_min, "smallest regularization parameter");
  solve_cmd->add_option("--comp-tol", popts.comp_tol, "target complementarity violation");
  solve_cmd->add_option("--rounding-tol", popts.rounding_tol, "final zero-rounding threshold");

  auto* certify_cmd = app.add_subcommand("certify", "first-order certificates and CQ report");
  ProblemOpts certify_problem;
  add_problem_options(certify_cmd, certify_problem);
  add_common(certify_cmd);
  std::string x_text, y_text;
  certify_cmd->add_option("--x", x_text, "point x as comma-separated values")->required();
  certify_cmd->add_option("--y", y_text, "optional completion y");

  auto* second_cmd = app.add_subcommand("second-order", "CC-SOSC analysis with branch reports");
  ProblemOpts second_problem;
  add_problem_options(second_cmd, second_problem);
  add_common(second_cmd);
  std::string sx_text, sy_text, mode_text = "exists", cone_text = "pair";
  SecondOrderOptions soopts;
  second_cmd->add_option("--x", sx_text, "point x as comma-separated values")->required();
  second_cmd->add_option("--y", sy_text, "optional completion y");
  second_cmd->add_option("--mode", mode_text, "multiplier mode: exists | forall");
  second_cmd->add_option("--cone", cone_text, "cone mode: pair | x-union");
  second_cmd->add_option("--samples", soopts.samples_per_branch, "sampled directions per branch");

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force support enumeration");
  ProblemOpts oracle_problem;
  add_problem_options(oracle_cmd, oracle_problem);
  add_common(oracle_cmd);
  add_solver(oracle_cmd);
  OracleOptions oopts;
  oracle_cmd->add_option("--starts-per-support", oopts.starts_per_support,
                         "random starts per support");
  oracle_cmd->add_option("--support-cap", oopts.support_cap, "enumeration limit");

  auto* deriv_cmd = app.add_subcommand("check-derivatives", "finite-difference derivative check");
  ProblemOpts deriv_problem;
  add_problem_options(deriv_cmd, deriv_problem);
  add_common(deriv_cmd);
  std::string dx_text;
  double step = 1e-5, dtol = 1e-5;
  deriv_cmd->add_option("--x", dx_text, "check point (default: seeded random)");
  deriv_cmd->add_option("--step", step, "finite-difference step");
  deriv_cmd->add_option("--tol", dtol, "pass/fail tolerance");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (solve_cmd->parsed()) {
    Problem problem = make_problem_from_opts(solve_problem);
    Vec start = start_text.empty() ? Vec(Vec::Zero(problem.n))
                                   : parse_csv_vector(start_text, "--start");
    if (start.size() != problem.n) throw ParseError("--start", "wrong length");
    popts.seed = seed;
    RegularizationPath path = solve_path(problem, start, popts, nopts, tols);
    emit(path_to_json_lines(path, seed), out_path);
    if (!path.converged) {
      std::cerr << "path stalled before reaching the complementarity target\n";
      return kExitResource;
    }
    bool certified = path.final_certificate.kind == StationarityKind::S ||
                     path.m_certificate.kind == StationarityKind::M;
    return certified ? kExitOk : kExitResource;
  }

  if (certify_cmd->parsed()) {
    Problem problem = make_problem_from_opts(certify_problem);
    Vec x = parse_csv_vector(x_text, "--x");
    if (x.size() != problem.n) throw ParseError("--x", "wrong length");
    PrimalPair pair;
    pair.x = x;
    pair.y = y_text.empty() ? complete_y(problem, x, tols) : parse_csv_vector(y_text, "--y");
    if (pair.y.size() != problem.n) throw ParseError("--y", "wrong length");
    emit(flat_certificate(problem, pair, tols).dump(2), out_path);
    return kExitOk;
  }

  if (second_cmd->parsed()) {
    Problem problem = make_problem_from_opts(second_problem);
    Vec x = parse_csv_vector(sx_text, "--x");
    if (x.size() != problem.n) throw ParseError("--x", "wrong length");
    if (!is_feasible_original(problem, x, tols))
      throw InfeasibleInput("second-order: x is not feasible for the original problem");
    PrimalPair pair;
    pair.x = x;
    pair.y = sy_text.empty() ? complete_y(problem, x, tols) : parse_csv_vector(sy_text, "--y");
    if (pair.y.size() != problem.n) throw ParseError("--y", "wrong length");
    MultiplierMode mode;
    if (mode_text == "exists") {
      mode = MultiplierMode::Exists;
    } else if (mode_text == "forall") {
      mode = MultiplierMode::ForAll;
    } else {
      throw ParseError("--mode", "expected 'exists' or 'forall'");
    }
    if (cone_text == "x-union") {
      soopts.cone_mode = ConeMode::XUnion;
    } else if (cone_text != "pair") {
      throw ParseError("--cone", "expected 'pair' or 'x-union'");
    }
    if (seed != 0) soopts.seed = seed;
    SecondOrderVerdict verdict;
    try {
      verdict = check_cc_sosc(problem, pair, mode, soopts, tols);
    } catch (const InfeasibleInput& e) {
      std::cerr << e.what() << "\n";
      return kExitPrecondition;
    }
    emit(to_json(verdict, soopts.seed).dump(2), out_path);
    return kExitOk;
  }

  if (oracle_cmd->parsed()) {
    Problem problem = make_problem_from_opts(oracle_problem);
    oopts.seed = seed;
    OracleResult result = brute_force_solve(problem, oopts, nopts, tols);
    emit(to_json(result, seed).dump(2), out_path);
    return kExitOk;
  }

  if (deriv_cmd->parsed()) {
    Problem problem = make_problem_from_opts(deriv_problem);
    Vec x;
    if (dx_text.empty()) {
      SplitMix64 rng(seed == 0 ? 1 : seed);
      x = rng.gaussian_vector(problem.n);
    } else {
      x = parse_csv_vector(dx_text, "--x");
      if (x.size() != problem.n) throw ParseError("--x", "wrong length");
    }
    DerivativeReport report = check_derivatives(problem, x, step, dtol);
    json doc = to_json(report);
    doc["x"] = to_json(x);
    doc["seed"] = seed;
    emit(doc.dump(2), out_path);
    return kExitOk;
  }
  return kExitInputError;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(merge_config_args(args));
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const UnknownProblem& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const InfeasibleInput& e) {
    std::cerr << e.what() << "\n";
    return kExitInfeasible;
  } catch (const EnumerationLimit& e) {
    std::cerr << e.what() << "\n";
    return kExitResource;
  } catch (const BranchExplosion& e) {
    std::cerr << e.what() << "\n";
    return kExitResource;
  } catch (const PathStalled& e) {
    std::cerr << e.what() << "\n";
    return kExitResource;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitInputError;
  }
}
