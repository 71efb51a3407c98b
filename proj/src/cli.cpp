#include "oag/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "oag/harness.hpp"

namespace oag {
namespace {

using Json = nlohmann::ordered_json;

struct CommonFlags {
  std::string problem;
  std::vector<std::string> generator;  // name then key=val pairs
  std::string instance;
  std::string adversary;
  std::size_t trials = 1000;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("OAG_SEED");
  if (!env || !*env) return 1;
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    if (*env != '-') value = std::stoull(env, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || env[used] != '\0') {
    throw Error(ErrorCode::kInvalidParam, std::string("OAG_SEED is not a seed: '") + env + "'");
  }
  return value;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--problem", f.problem, "matching | caching | mts")->required();
  cmd->add_option("--generator", f.generator, "generator name followed by key=val parameters")
      ->expected(1, -1);
  cmd->add_option("--instance", f.instance, "instance file instead of a generator");
  cmd->add_option("--adversary", f.adversary, "bad guide (problem default or random_valid)");
  cmd->add_option("--trials", f.trials, "trials per grid point")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "master seed (default: $OAG_SEED or 1)");
  cmd->add_option("--threads", f.threads, "worker threads (0: runtime default)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "output CSV (default: stdout)");
}

struct Resolved {
  Problem problem;
  Adversary adversary;
  std::string generator;
  GeneratorParams params;
  std::uint64_t seed = 1;
  std::uint64_t guide_salt = 0;
  std::unique_ptr<Experiment> experiment;
};

Resolved resolve(const CommonFlags& f) {
  Resolved r;
  r.problem = parse_problem(f.problem);
  r.adversary = f.adversary.empty() ? Adversary::kPrimary : parse_adversary(r.problem, f.adversary);
  if (!f.generator.empty()) {
    r.generator = f.generator.front();
    for (std::size_t i = 1; i < f.generator.size(); ++i) {
      const std::string& kv = f.generator[i];
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::kInvalidParam, "generator parameter '" + kv + "' is not key=val");
      }
      r.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  r.seed = f.seed ? *f.seed : default_seed();
  r.guide_salt = splitmix64(r.seed ^ 0x5A17ED6A1DE5ULL);
  ExperimentOptions options;
  options.adversary = r.adversary;
  options.guide_salt = r.guide_salt;
  r.experiment = build_experiment(r.problem, r.generator, r.params, f.instance, options);
  return r;
}

Json config_json(const std::string& command, const CommonFlags& f, const Resolved& r) {
  Json j;
  j["command"] = command;
  j["problem"] = problem_name(r.problem);
  if (!r.generator.empty()) {
    j["generator"] = r.generator;
    Json params = Json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    j["params"] = params;
  } else {
    j["instance"] = f.instance;
  }
  j["adversary"] = adversary_name(r.problem, r.adversary);
  j["trials"] = f.trials;
  j["master_seed"] = r.seed;
  j["guide_salt"] = r.guide_salt;
  j["opt"] = r.experiment->opt().get_str();
  j["bound_parameter"] = r.experiment->bound_parameter();
  j["additive_constant"] = r.experiment->additive_constant();
  return j;
}

std::string join_command(const std::vector<std::string>& args) {
  std::string s = "oag";
  for (const std::string& a : args) s += ' ' + a;
  return s;
}

// Writes to the --out file when given, otherwise to `out`.
template <typename Writer>
void emit(const std::string& path, std::ostream& out, Writer write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(file);
  file.close();
  if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

double slack_for(const Experiment& e) {
  return sgn(e.opt()) > 0 ? e.additive_constant() / e.opt().get_d() : 0.0;
}

int cmd_run(const std::vector<std::string>& args, const CommonFlags& f, double beta, double tau,
            std::ostream& out) {
  Resolved r = resolve(f);
  const OagConfig config = OagConfig::from_decimal(beta, tau);
  const auto records = run_point_parallel(*r.experiment, config, 0, f.trials, r.seed, f.threads);
  Json j = config_json("run", f, r);
  j["beta"] = config.beta.value();
  j["tau"] = config.tau.value();
  emit(f.out, out, [&](std::ostream& o) {
    write_records_csv(o, r.problem, records, {"command: " + join_command(args), "config: " + j.dump()});
  });
  return kExitOk;
}

int cmd_sweep(const std::vector<std::string>& args, const CommonFlags& f,
              const std::string& beta_grid, const std::string& tau_grid,
              const std::string& records_path, const std::string& plot_path, std::ostream& out) {
  const auto betas = parse_grid(beta_grid);
  const auto taus = parse_grid(tau_grid);
  Resolved r = resolve(f);
  const Experiment& exp = *r.experiment;
  const auto grid = make_grid(betas, taus);
  check_seed_collisions(r.seed, grid.size(), f.trials);
  std::vector<TrialRecord> all;
  std::vector<EstimateRow> rows;
  for (const GridPoint& g : grid) {
    const OagConfig config(g.beta, g.tau);
    auto records = run_point_parallel(exp, config, g.index, f.trials, r.seed, f.threads);
    std::vector<double> ratios;
    ratios.reserve(records.size());
    for (const TrialRecord& rec : records) ratios.push_back(rec.ratio);
    EstimateRow row;
    row.estimate = estimate(ratios);
    row.estimate.grid_index = g.index;
    row.estimate.beta = g.beta;
    row.estimate.tau = g.tau;
    row.check = compare_to_bound(row.estimate, objective_of(r.problem),
                                 exp.bound(g.beta.value(), g.tau.value()), slack_for(exp));
    rows.push_back(row);
    if (!records_path.empty()) {
      all.insert(all.end(), std::make_move_iterator(records.begin()),
                 std::make_move_iterator(records.end()));
    }
  }
  Json j = config_json("sweep", f, r);
  j["beta_grid"] = beta_grid;
  j["tau_grid"] = tau_grid;
  const std::vector<std::string> header = {"command: " + join_command(args), "config: " + j.dump()};
  emit(f.out, out, [&](std::ostream& o) { write_estimates_csv(o, r.problem, rows, header); });
  if (!records_path.empty()) {
    emit(records_path, out, [&](std::ostream& o) { write_records_csv(o, r.problem, all, header); });
  }
  if (!plot_path.empty()) {
    emit(plot_path, out, [&](std::ostream& o) {
      write_svg_plot(o, r.problem, exp.bound_parameter(), rows);
    });
  }
  return kExitOk;
}

int cmd_bound(const std::string& problem_text, const std::string& beta_grid,
              const std::string& tau_grid, int k, int n, const std::string& out_path,
              std::ostream& out) {
  const Problem problem = parse_problem(problem_text);
  const auto betas = parse_grid(beta_grid);
  const auto taus = parse_grid(tau_grid);
  const int parameter = problem == Problem::kCaching ? k : problem == Problem::kMts ? n : 0;
  if (problem != Problem::kMatching && parameter < 1) {
    throw Error(ErrorCode::kInvalidParam, "bound parameter (--k / --n) must be >= 1");
  }
  emit(out_path, out, [&](std::ostream& o) {
    o << "problem,beta,tau,parameter,bound,bound_exact,annotation\n";
    for (const Probability& b : betas) {
      for (const Probability& t : taus) {
        const double v = bound_value(problem, b.value(), t.value(), parameter);
        const auto exact = bound_value_exact(problem, b.exact(), t.exact(), parameter);
        const char* note = b.is_zero() ? "consistency" : b.is_one() ? "robustness" : "";
        o << problem_name(problem) << ',' << format_double(b.value()) << ','
          << format_double(t.value()) << ',' << parameter << ',' << format_double(v) << ','
          << (exact ? exact->get_str() : "") << ',' << note << '\n';
      }
    }
  });
  return kExitOk;
}

int cmd_oracle_check(std::size_t trials, std::uint64_t budget, std::optional<std::uint64_t> seed,
                     int threads, double tau_shift, std::ostream& out) {
  OracleOptions options;
  options.trials = trials;
  options.leaf_budget = budget;
  options.master_seed = seed ? *seed : default_seed();
  options.threads = threads;
  options.tau_shift = tau_shift;
  const auto lines = run_oracle_suite(options);
  bool ok = true;
  for (const OracleLine& l : lines) {
    const bool pass = l.agrees && l.within_bound;
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << l.case_name << " beta=" << format_double(l.beta.value())
        << " tau=" << format_double(l.tau.value()) << " exact=" << l.exact_ratio.get_str() << " ("
        << format_double(l.exact_ratio.get_d()) << ") mc=" << format_double(l.mc_mean)
        << " se=" << format_double(l.mc_stderr) << " bound=" << format_double(l.bound)
        << " leaves=" << l.leaves << (l.agrees ? "" : " [monte-carlo disagrees]")
        << (l.within_bound ? "" : " [bound violated]") << '\n';
  }
  out << (ok ? "oracle check passed" : "oracle check FAILED") << " (" << lines.size()
      << " comparisons)\n";
  return ok ? kExitOk : kExitOracleFailure;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int cmd_plot(const std::string& in_path, const std::string& out_path, std::ostream& out) {
  std::ifstream in(in_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + in_path + "'");
  std::string line;
  std::optional<int> parameter;
  std::optional<Problem> problem;
  std::vector<EstimateRow> rows;
  bool header_seen = false;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParse, in_path + ": line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# config: ", 0) == 0) {
      try {
        const Json j = Json::parse(line.substr(10));
        parameter = j.at("bound_parameter").get<int>();
      } catch (const std::exception& e) {
        fail(std::string("bad config comment: ") + e.what());
      }
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("problem,beta,tau,trials,mean_ratio", 0) != 0) fail("not an estimates CSV");
      header_seen = true;
      continue;
    }
    const auto c = split_csv(line);
    if (c.size() != 11) fail("expected 11 columns");
    try {
      problem = parse_problem(c[0]);
      EstimateRow row;
      row.estimate.beta = Probability::from_decimal(std::stod(c[1]));
      row.estimate.tau = Probability::from_decimal(std::stod(c[2]));
      row.estimate.trials = std::stoull(c[3]);
      row.estimate.mean = std::stod(c[4]);
      if (!c[5].empty()) row.estimate.std_error = std::stod(c[5]);
      row.estimate.ci_low = std::stod(c[6]);
      row.estimate.ci_high = std::stod(c[7]);
      row.check.bound = std::stod(c[8]);
      row.check.margin = std::stod(c[9]);
      row.check.pass = c[10] == "true";
      rows.push_back(row);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("bad number");
    }
  }
  if (!header_seen) fail("missing header");
  if (!problem) {
    problem = Problem::kMatching;  // header-only file: nothing to draw
  }
  if (!parameter && *problem != Problem::kMatching) fail("missing '# config:' line with bound_parameter");
  emit(out_path, out, [&](std::ostream& o) {
    write_svg_plot(o, *problem, parameter.value_or(0), rows);
  });
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidParam:
    case ErrorCode::kParse:
    case ErrorCode::kTooLarge:
    case ErrorCode::kIo:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int oag_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online algorithms with unreliable guidance: simulation workbench", "oag"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  double beta = 0.0, tau = 0.0;
  auto* run = app.add_subcommand("run", "one (beta, tau) point; writes per-trial records");
  add_common(run, run_flags);
  run->add_option("--beta", beta, "probability of the bad guide")->required();
  run->add_option("--tau", tau, "trust parameter")->required();

  CommonFlags sweep_flags;
  std::string beta_grid = "0:1:0.25", tau_grid = "0:1:0.25", records_path, plot_path;
  auto* sweep = app.add_subcommand("sweep", "grid of (beta, tau) points; writes estimates");
  add_common(sweep, sweep_flags);
  sweep->add_option("--beta-grid", beta_grid, "a:b:step (inclusive) or comma list");
  sweep->add_option("--tau-grid", tau_grid, "a:b:step (inclusive) or comma list");
  sweep->add_option("--records", records_path, "also write per-trial records");
  sweep->add_option("--plot", plot_path, "SVG plot of the estimates");

  std::string bound_problem, bound_beta = "0:1:0.25", bound_tau = "0:1:0.25", bound_out;
  int bound_k = 10, bound_n = 8;
  auto* bound = app.add_subcommand("bound", "tabulate the competitive-ratio bounds");
  bound->add_option("--problem", bound_problem, "matching | caching | mts")->required();
  bound->add_option("--beta-grid", bound_beta, "a:b:step (inclusive) or comma list");
  bound->add_option("--tau-grid", bound_tau, "a:b:step (inclusive) or comma list");
  bound->add_option("--k", bound_k, "cache size (caching)");
  bound->add_option("--n", bound_n, "state count (mts)");
  bound->add_option("--out", bound_out, "output CSV (default: stdout)");

  std::size_t oracle_trials = 100000;
  std::uint64_t oracle_budget = 1000000;
  std::optional<std::uint64_t> oracle_seed;
  int oracle_threads = 0;
  double tau_shift = 0.0;
  auto* oracle = app.add_subcommand("oracle-check", "exact enumeration vs Monte-Carlo on tiny instances");
  oracle->add_option("--trials", oracle_trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);
  oracle->add_option("--budget", oracle_budget, "leaf budget per enumeration")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "master seed (default: $OAG_SEED or 1)");
  oracle->add_option("--threads", oracle_threads, "worker threads")->check(CLI::NonNegativeNumber);
  oracle->add_option("--inject-tau-shift", tau_shift)->group("");

  std::string plot_in, plot_out;
  auto* plot = app.add_subcommand("plot", "SVG plot from an estimates CSV");
  plot->add_option("--in", plot_in, "estimates CSV")->required();
  plot->add_option("--out", plot_out, "SVG output (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(args, run_flags, beta, tau, out);
    if (sweep->parsed()) {
      return cmd_sweep(args, sweep_flags, beta_grid, tau_grid, records_path, plot_path, out);
    }
    if (bound->parsed()) {
      return cmd_bound(bound_problem, bound_beta, bound_tau, bound_k, bound_n, bound_out, out);
    }
    if (oracle->parsed()) {
      return cmd_oracle_check(oracle_trials, oracle_budget, oracle_seed, oracle_threads, tau_shift,
                              out);
    }
    if (plot->parsed()) return cmd_plot(plot_in, plot_out, out);
  } catch (const Error& e) {
    err << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace oag
