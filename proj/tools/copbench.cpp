// copbench: benchmark harness for the comparison-based noisy optimizers.
//
// Subcommands:
//   run    one seeded (budget, run-index) record, printed as CSV
//   sweep  full budget grid x repeated runs; writes records/summary/manifest/plot script
//   slope  log-log slope fit from a summary CSV
//   cop    one COP comparison, printing (pair, K, f)
//   check  built-in property suites (kernel equivalence, CDF round trip, variance law)
//
// Exit codes: 0 success, 2 contract error, 3 I/O error.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cops/bench.hpp"
#include "cops/cop.hpp"
#include "cops/normal.hpp"
#include "cops/optimizers.hpp"
#include "cops/problem.hpp"

namespace {

// "2^a..2^b" (dyadic range) or a comma-separated list.
std::vector<std::uint64_t> parse_budgets(const std::string& text) {
  std::vector<std::uint64_t> out;
  const auto range_sep = text.find("..");
  if (range_sep != std::string::npos && text.rfind("2^", 0) == 0) {
    const int lo = std::stoi(text.substr(2, range_sep - 2));
    const auto rhs = text.substr(range_sep + 2);
    if (rhs.rfind("2^", 0) != 0) throw cops::contract_error("budget range must look like 2^a..2^b");
    const int hi = std::stoi(rhs.substr(2));
    if (lo < 1 || hi < lo || hi > 62) throw cops::contract_error("bad dyadic budget range");
    for (int k = lo; k <= hi; ++k) out.push_back(1ull << k);
    return out;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  if (out.empty()) throw cops::contract_error("empty budget list");
  return out;
}

void add_config_flags(CLI::App* cmd, cops::SweepConfig& config, std::string& algo_name,
                      std::string& problem_name, std::string& budgets_text) {
  cmd->add_option("--algo", algo_name, "cops1|cops|copquad|copquad-widening|kw")->required();
  cmd->add_option("--dim", config.dim, "problem dimension");
  cmd->add_option("--noise-std", config.noise_std, "oracle noise standard deviation D");
  cmd->add_option("--gen-scale", config.gen_scale,
                  "problem-generation scale (defaults to --noise-std; set differently to run "
                  "outside the generated problem's compliant noise level)");
  cmd->add_option("--c", config.min_eig, "eigenvalue lower bound for generation (default gen-scale/10)");
  cmd->add_option("--epsilon", config.epsilon, "optimum margin from the unit sphere");
  cmd->add_option("--budgets", budgets_text, "comma list or 2^a..2^b range");
  cmd->add_option("--runs", config.runs, "runs per budget (default 50)");
  cmd->add_option("--seed", config.master_seed, "master seed");
  cmd->add_flag("--fixed-problem", config.fixed_problem, "one problem shared by all runs");
  cmd->add_flag("--paper-literal-budget", config.paper_literal_budget,
                "use the literal budget-splitting formulas");
  cmd->add_option("--clamp-bound", config.clamp_bound, "clamp half-width (default 5)");
  cmd->add_option("--problem", problem_name, "auto|sphere|quadratic");
  cmd->add_option("--workers", config.workers, "worker threads (0 = hardware); results identical");
}

void resolve_names(cops::SweepConfig& config, const std::string& algo_name,
                   const std::string& problem_name) {
  auto algo = cops::parse_algorithm(algo_name);
  if (!algo) throw cops::contract_error("unknown algorithm: " + algo_name);
  config.algo = *algo;
  auto kind = cops::parse_problem_kind(problem_name);
  if (!kind) throw cops::contract_error("unknown problem kind: " + problem_name);
  config.problem = *kind;
}

int run_checks();

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comparison-based noisy optimization benchmark"};
  app.require_subcommand(1);

  cops::SweepConfig config;
  std::string algo_name, budgets_text = "2^10..2^14", problem_name = "auto";
  std::string manifest_path, summary_path, stat_name = "median", out_dir;
  int run_index = 0;
  std::uint64_t single_budget = 1 << 12;
  bool verbose = false;

  auto* cmd_run = app.add_subcommand("run", "one seeded record");
  add_config_flags(cmd_run, config, algo_name, problem_name, budgets_text);
  cmd_run->add_option("--budget", single_budget, "evaluation budget N")->required();
  cmd_run->add_option("--run-index", run_index, "run index within the seed");
  cmd_run->add_flag("--verbose", verbose, "also print x_hat and both regret conventions");

  auto* cmd_sweep = app.add_subcommand("sweep", "full budget grid");
  add_config_flags(cmd_sweep, config, algo_name, problem_name, budgets_text);
  cmd_sweep->add_option("--out", out_dir, "output directory")->required();
  cmd_sweep->add_option("--manifest", manifest_path, "replay this manifest instead of flags");
  // with --manifest, --algo is not needed
  cmd_sweep->get_option("--algo")->required(false);

  auto* cmd_slope = app.add_subcommand("slope", "log-log slope from a summary CSV");
  cmd_slope->add_option("--summary", summary_path, "summary.csv path")->required();
  cmd_slope->add_option("--stat", stat_name, "median|mean");

  std::uint64_t cop_k = 50;
  std::uint64_t cop_seed = 1;
  std::vector<double> cop_x, cop_y;
  auto* cmd_cop = app.add_subcommand("cop", "one comparison, printing (pair, K, f)");
  add_config_flags(cmd_cop, config, algo_name, problem_name, budgets_text);
  cmd_cop->get_option("--algo")->required(false);
  cmd_cop->add_option("--x", cop_x, "first point")->required()->expected(-1);
  cmd_cop->add_option("--y", cop_y, "second point")->required()->expected(-1);
  cmd_cop->add_option("--k", cop_k, "samples per point");
  cmd_cop->add_option("--cop-seed", cop_seed, "stream id for the call");

  auto* cmd_check = app.add_subcommand("check", "built-in property suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      resolve_names(config, algo_name, problem_name);
      auto out = cops::run_single(config, single_budget, run_index);
      cops::write_records_csv({out.record}, std::cout);
      if (verbose) {
        std::cout << "x_hat =";
        for (double v : out.result.x_hat) std::cout << ' ' << v;
        std::cout << "\nregret (fitness gap) = " << out.record.regret
                  << "\nregret squared       = " << out.record.regret * out.record.regret << "\n";
      }
    } else if (*cmd_sweep) {
      if (!manifest_path.empty()) {
        config = cops::load_manifest_file(manifest_path);
        if (cmd_sweep->count("--workers")) {
          // workers stay overridable; they cannot change results
        }
      } else {
        resolve_names(config, algo_name, problem_name);
        config.budgets = parse_budgets(budgets_text);
      }
      config.out_dir = out_dir;
      std::vector<cops::ExperimentRecord> partial;
      try {
        auto records = cops::sweep(config, &partial);
        auto summaries = cops::aggregate(records);
        cops::write_outputs(records, summaries, config);
        std::fprintf(stderr, "wrote %zu records to %s\n", records.size(), config.out_dir.c_str());
      } catch (const cops::contract_error&) {
        if (!partial.empty()) {
          std::ofstream os(std::filesystem::path(config.out_dir) / "records.partial.csv");
          if (os) cops::write_records_csv(partial, os);
          std::fprintf(stderr, "flushed %zu already-computed records\n", partial.size());
        }
        throw;
      }
    } else if (*cmd_slope) {
      std::ifstream is(summary_path);
      if (!is) throw cops::io_error("cannot open " + summary_path);
      auto summaries = cops::read_summary_csv(is);
      const auto stat = stat_name == "mean" ? cops::SummaryStatistic::mean
                                            : cops::SummaryStatistic::median;
      auto fit = cops::fit_loglog_slope(summaries, stat);
      std::cout << "slope = " << fit.slope << "\nintercept = " << fit.intercept
                << "\nresidual_norm = " << fit.residual_norm << "\n";
      if (!fit.excluded_budgets.empty()) {
        std::cout << "excluded_budgets =";
        for (auto b : fit.excluded_budgets) std::cout << ' ' << b;
        std::cout << "\n";
      }
    } else if (*cmd_cop) {
      if (!algo_name.empty()) resolve_names(config, algo_name, problem_name);
      if (cop_x.size() != cop_y.size() || cop_x.empty())
        throw cops::contract_error("cop: x and y must have the same nonzero dimension");
      config.dim = static_cast<int>(cop_x.size());
      // the debug comparison always probes the seed-determined fixed problem
      cops::Problem problem = cops::fixed_problem(config);
      cops::EvaluationCounter counter(2 * cop_k);
      cops::RandomStream stream(config.master_seed, cop_seed);
      auto oracle = [&](std::span<const double> x, cops::RandomStream& rs,
                        cops::EvaluationCounter& ctr) {
        return cops::evaluate_noisy(problem, x, rs, ctr);
      };
      auto f = cops::cop(static_cast<int>(cop_k), cop_x, cop_y, oracle, stream, counter);
      std::cout << "pair = (";
      for (std::size_t i = 0; i < cop_x.size(); ++i) std::cout << (i ? "," : "") << cop_x[i];
      std::cout << ") vs (";
      for (std::size_t i = 0; i < cop_y.size(); ++i) std::cout << (i ? "," : "") << cop_y[i];
      std::cout << ")\nK = " << f.samples_per_point << "\nf = " << f.value << "\n";
    } else if (*cmd_check) {
      return run_checks();
    }
  } catch (const cops::io_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const cops::contract_error& e) {
    std::fprintf(stderr, "contract error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

namespace {

int run_checks() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("%-28s %s\n", name, ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  };

  // Counting kernel vs the O(K^2) definition on random instances.
  {
    cops::RandomStream stream(2024, 1);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      const int k = 1 + static_cast<int>(stream.next_u64() % 64);
      std::vector<double> xs(k), ys(k);
      for (auto& v : xs) v = stream.next_gaussian();
      for (auto& v : ys) v = stream.next_gaussian();
      std::uint64_t brute = 0;
      for (double x : xs)
        for (double y : ys)
          if (x < y) ++brute;
      ok = cops::pairwise_win_fraction(xs, ys).win_count == brute;
    }
    report("kernel equivalence", ok);
  }

  // CDF round trip over [-8, 8].
  {
    bool ok = true;
    for (int i = 0; i <= 1000 && ok; ++i) {
      const double x = -8.0 + 16.0 * i / 1000.0;
      ok = std::abs(cops::std_normal_quantile(cops::std_normal_cdf(x)) - x) <= 1e-8;
    }
    report("cdf round trip", ok);
  }

  // Variance law: empirical Var(f) <= 1/(2K) + 3 standard errors.
  {
    bool ok = true;
    for (int k : {10, 50, 200}) {
      cops::RandomStream stream(7, k);
      const int trials = 2000;
      double sum = 0, sumsq = 0;
      for (int t = 0; t < trials; ++t) {
        std::vector<double> xs(k), ys(k);
        for (auto& v : xs) v = 0.3 + stream.next_gaussian();
        for (auto& v : ys) v = 0.7 + stream.next_gaussian();
        const double f = cops::pairwise_win_fraction(xs, ys).value;
        sum += f;
        sumsq += f * f;
      }
      const double mean = sum / trials;
      const double var = (sumsq - trials * mean * mean) / (trials - 1);
      const double se = var * std::sqrt(2.0 / (trials - 1));
      ok = ok && var <= 1.0 / (2.0 * k) + 3.0 * se;
    }
    report("variance law", ok);
  }

  return failures == 0 ? 0 : 2;
}

}  // namespace
