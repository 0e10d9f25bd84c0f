#ifndef COPS_BENCH_HPP
#define COPS_BENCH_HPP

// Benchmark harness: budget sweeps over seeded repeated runs, quantile
// aggregation, log-log slope fitting, CSV/manifest emission and a generated
// gnuplot script for the regret curves.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cops/errors.hpp"
#include "cops/optimizers.hpp"
#include "cops/problem.hpp"
#include "cops/random.hpp"

namespace cops {

inline constexpr const char* kVersion = "0.1.0";

enum class ProblemKind { auto_detect, sphere, quadratic };

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::auto_detect: return "auto";
    case ProblemKind::sphere: return "sphere";
    case ProblemKind::quadratic: return "quadratic";
  }
  return "?";
}

inline std::optional<ProblemKind> parse_problem_kind(const std::string& s) {
  if (s == "auto") return ProblemKind::auto_detect;
  if (s == "sphere") return ProblemKind::sphere;
  if (s == "quadratic") return ProblemKind::quadratic;
  return std::nullopt;
}

/// Full description of a sweep; everything a replay needs.
struct SweepConfig {
  AlgorithmId algo = AlgorithmId::copquad;
  ProblemKind problem = ProblemKind::auto_detect;
  int dim = 2;
  double noise_std = 1.0;       // D used by the oracle
  double gen_scale = 0.0;       // problem-generation scale; 0 means noise_std
  double min_eig = 0.0;         // c; 0 means gen_scale / 10
  double epsilon = 0.05;
  std::vector<std::uint64_t> budgets;
  int runs = 50;
  std::uint64_t master_seed = 1;
  bool fixed_problem = false;
  bool paper_literal_budget = false;
  double clamp_bound = 5.0;
  std::string out_dir;
  int workers = 0;  // 0: hardware concurrency; does not affect results

  ProblemKind resolved_problem_kind() const {
    if (problem != ProblemKind::auto_detect) return problem;
    switch (algo) {
      case AlgorithmId::cops1:
      case AlgorithmId::cops:
      case AlgorithmId::kw:
        return ProblemKind::sphere;
      default:
        return ProblemKind::quadratic;
    }
  }
  double resolved_gen_scale() const { return gen_scale > 0.0 ? gen_scale : noise_std; }
  double resolved_min_eig() const { return min_eig > 0.0 ? min_eig : resolved_gen_scale() / 10.0; }
};

/// One (budget, run) outcome.
struct ExperimentRecord {
  std::string algo;
  int dim = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  int run = 0;
  std::uint64_t budget = 0;
  double regret = 0.0;
  std::uint64_t consumed = 0;
  bool singular_branch = false;
  bool projection_hit = false;
};

/// Per-budget aggregates over the runs.
struct RegretSummary {
  std::uint64_t budget = 0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  int n_runs = 0;
};

namespace detail {

inline constexpr std::uint64_t kFixedProblemTag = 0xF1A5ED0000000001ull;

inline void validate(const SweepConfig& config) {
  if (config.runs < 1) throw contract_error("sweep config: runs must be >= 1");
  if (config.budgets.empty()) throw contract_error("sweep config: budget grid is empty");
  for (std::size_t i = 1; i < config.budgets.size(); ++i)
    if (config.budgets[i] <= config.budgets[i - 1])
      throw contract_error("sweep config: budget grid must be strictly increasing");
  if (config.dim < 1) throw contract_error("sweep config: dimension must be >= 1");
  if (!(config.noise_std > 0.0)) throw contract_error("sweep config: noise std must be positive");
  if (!(config.clamp_bound > 0.0)) throw contract_error("sweep config: clamp bound must be positive");
}

/// x* for sphere runs: uniform on [-1,1] in dimension 1, uniform in the unit
/// ball otherwise.
inline std::vector<double> draw_sphere_optimum(int d, RandomStream& stream) {
  if (d == 1) return {stream.next_uniform(-1.0, 1.0)};
  std::vector<double> x(d);
  double nrm = 0.0;
  for (double& v : x) {
    v = stream.next_gaussian();
    nrm += v * v;
  }
  nrm = std::sqrt(nrm);
  const double radius = std::pow(stream.next_uniform(), 1.0 / d);
  for (double& v : x) v *= radius / nrm;
  return x;
}

inline Problem make_problem(const SweepConfig& config, RandomStream gen_stream) {
  if (config.resolved_problem_kind() == ProblemKind::sphere) {
    return SphereProblem(draw_sphere_optimum(config.dim, gen_stream), 1.0);
  }
  const double scale = config.resolved_gen_scale();
  NoisyQuadraticProblem p = generate_problem(config.dim, scale, config.resolved_min_eig(),
                                             config.epsilon, gen_stream);
  if (scale != config.noise_std) p = with_noise_std(p, config.noise_std);
  return p;
}

}  // namespace detail

/// The problem shared by all runs in fixed-problem mode.
inline Problem fixed_problem(const SweepConfig& config) {
  return detail::make_problem(config, RandomStream(config.master_seed, detail::kFixedProblemTag));
}

struct SingleRunOutput {
  ExperimentRecord record;
  RunResult result;        // x_hat, diagnostics, model estimate if any
  Problem problem;
};

/// One seeded run: the stream is derived by hashing (master seed, budget,
/// run index), so grid extensions never perturb existing runs.
inline SingleRunOutput run_single(const SweepConfig& config, std::uint64_t budget, int run_index) {
  if (run_index < 0) throw contract_error("run_single: run index must be >= 0");
  if (config.dim < 1) throw contract_error("run_single: dimension must be >= 1");
  if (!(config.noise_std > 0.0)) throw contract_error("run_single: noise std must be positive");

  RandomStream run_stream(config.master_seed, derive_stream_id(budget, static_cast<std::uint64_t>(run_index)));
  Problem problem = config.fixed_problem ? fixed_problem(config)
                                         : detail::make_problem(config, run_stream.substream(0));

  RunOptions opts;
  opts.paper_literal_budget = config.paper_literal_budget;
  opts.widening.base = config.clamp_bound;

  RunResult result;
  try {
    result = run_optimizer(problem, config.algo, budget, run_stream.substream(1), opts);
  } catch (const contract_error& e) {
    throw contract_error("run(algo=" + to_string(config.algo) + ", budget=" + std::to_string(budget) +
                         ", run=" + std::to_string(run_index) + "): " + e.what());
  }

  ExperimentRecord rec;
  rec.algo = to_string(config.algo);
  rec.dim = config.dim;
  rec.noise_std = std::visit([](const auto& p) { return p.noise_std; }, problem);
  rec.seed = config.master_seed;
  rec.run = run_index;
  rec.budget = budget;
  rec.regret = simple_regret(problem, result.x_hat);
  rec.consumed = result.consumed;
  rec.singular_branch = result.singular_branch;
  rec.projection_hit = result.projection_hit;
  return {std::move(rec), std::move(result), std::move(problem)};
}

/// All (budget x run) records, sorted by (budget, run index) regardless of
/// worker count. On failure the first error is rethrown; records already
/// computed are returned through `partial` when given.
inline std::vector<ExperimentRecord> sweep(const SweepConfig& config,
                                           std::vector<ExperimentRecord>* partial = nullptr) {
  detail::validate(config);
  const std::size_t n_budgets = config.budgets.size();
  const std::size_t total = n_budgets * static_cast<std::size_t>(config.runs);

  std::vector<std::optional<ExperimentRecord>> slots(total);
  std::atomic<std::size_t> next_task{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  int workers = config.workers > 0 ? config.workers
                                   : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<std::size_t>(workers, total));

  const std::size_t report_every = std::max<std::size_t>(1, total / 10);

  auto worker_fn = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= total) return;
      const std::size_t budget_idx = task / config.runs;
      const int run_idx = static_cast<int>(task % config.runs);
      try {
        slots[task] = run_single(config, config.budgets[budget_idx], run_idx).record;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
      const std::size_t completed = done.fetch_add(1) + 1;
      if (completed % report_every == 0 || completed == total) {
        std::lock_guard<std::mutex> lock(error_mutex);
        std::fprintf(stderr, "sweep: %zu/%zu runs\n", completed, total);
      }
    }
  };

  if (workers == 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
    for (auto& t : pool) t.join();
  }

  if (first_error) {
    if (partial) {
      partial->clear();
      for (auto& s : slots)
        if (s) partial->push_back(std::move(*s));
    }
    std::rethrow_exception(first_error);
  }

  std::vector<ExperimentRecord> records;
  records.reserve(total);
  for (auto& s : slots) records.push_back(std::move(*s));
  return records;
}

// --- aggregation --------------------------------------------------------------

namespace detail {

/// Type-7 quantile (linear interpolation between order statistics) of a
/// sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Per-budget mean/median/q10/q90 over runs. Records may arrive in any order;
/// the output is sorted by budget.
inline std::vector<RegretSummary> aggregate(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw contract_error("aggregate: no records");
  std::vector<std::pair<std::uint64_t, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == r.budget; });
    if (it == groups.end()) {
      groups.push_back({r.budget, {r.regret}});
    } else {
      it->second.push_back(r.regret);
    }
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<RegretSummary> out;
  out.reserve(groups.size());
  for (auto& [budget, regrets] : groups) {
    std::sort(regrets.begin(), regrets.end());
    RegretSummary s;
    s.budget = budget;
    s.n_runs = static_cast<int>(regrets.size());
    double sum = 0.0;
    for (double v : regrets) sum += v;
    s.mean = sum / static_cast<double>(regrets.size());
    s.median = detail::quantile_sorted(regrets, 0.5);
    s.q10 = detail::quantile_sorted(regrets, 0.10);
    s.q90 = detail::quantile_sorted(regrets, 0.90);
    out.push_back(s);
  }
  return out;
}

// --- log-log slope fit ----------------------------------------------------------

enum class SummaryStatistic { mean, median };

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_norm = 0.0;
  std::vector<std::uint64_t> excluded_budgets;  // nonpositive statistic, left out
};

/// Ordinary least squares of log(statistic) on log(budget).
inline SlopeFit fit_loglog_slope(const std::vector<RegretSummary>& summaries,
                                 SummaryStatistic stat = SummaryStatistic::median) {
  std::vector<double> lx, ly;
  SlopeFit fit;
  for (const auto& s : summaries) {
    const double v = stat == SummaryStatistic::mean ? s.mean : s.median;
    if (!(v > 0.0)) {
      fit.excluded_budgets.push_back(s.budget);
      continue;
    }
    lx.push_back(std::log(static_cast<double>(s.budget)));
    ly.push_back(std::log(v));
  }
  const std::size_t n = lx.size();
  if (n < 3) throw contract_error("fit_loglog_slope: needs >= 3 budgets with positive statistic");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  fit.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / static_cast<double>(n);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

// --- CSV / manifest / plot-script output ------------------------------------------

inline constexpr const char* kRecordsCsvHeader =
    "algo,dim,noise_std,seed,run,budget,regret,consumed,singular_branch,projection_hit";
inline constexpr const char* kSummaryCsvHeader = "budget,mean,median,q10,q90,n_runs";

inline void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& os) {
  os << kRecordsCsvHeader << "\n";
  for (const auto& r : records) {
    os << r.algo << ',' << r.dim << ',' << detail::format_real(r.noise_std) << ',' << r.seed << ','
       << r.run << ',' << r.budget << ',' << detail::format_real(r.regret) << ',' << r.consumed
       << ',' << (r.singular_branch ? 1 : 0) << ',' << (r.projection_hit ? 1 : 0) << "\n";
  }
}

inline std::vector<ExperimentRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordsCsvHeader)
    throw io_error("records CSV: missing or wrong header");
  std::vector<ExperimentRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    ExperimentRecord r;
    std::getline(ss, r.algo, ',');
    std::getline(ss, tok, ','); r.dim = std::stoi(tok);
    std::getline(ss, tok, ','); r.noise_std = std::stod(tok);
    std::getline(ss, tok, ','); r.seed = std::stoull(tok);
    std::getline(ss, tok, ','); r.run = std::stoi(tok);
    std::getline(ss, tok, ','); r.budget = std::stoull(tok);
    std::getline(ss, tok, ','); r.regret = std::stod(tok);
    std::getline(ss, tok, ','); r.consumed = std::stoull(tok);
    std::getline(ss, tok, ','); r.singular_branch = tok == "1";
    std::getline(ss, tok, ','); r.projection_hit = tok == "1";
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_summary_csv(const std::vector<RegretSummary>& summaries, std::ostream& os) {
  os << kSummaryCsvHeader << "\n";
  for (const auto& s : summaries) {
    os << s.budget << ',' << detail::format_real(s.mean) << ',' << detail::format_real(s.median)
       << ',' << detail::format_real(s.q10) << ',' << detail::format_real(s.q90) << ',' << s.n_runs
       << "\n";
  }
}

inline std::vector<RegretSummary> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSummaryCsvHeader)
    throw io_error("summary CSV: missing or wrong header");
  std::vector<RegretSummary> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    RegretSummary s;
    std::getline(ss, tok, ','); s.budget = std::stoull(tok);
    std::getline(ss, tok, ','); s.mean = std::stod(tok);
    std::getline(ss, tok, ','); s.median = std::stod(tok);
    std::getline(ss, tok, ','); s.q10 = std::stod(tok);
    std::getline(ss, tok, ','); s.q90 = std::stod(tok);
    std::getline(ss, tok, ','); s.n_runs = std::stoi(tok);
    out.push_back(s);
  }
  return out;
}

inline void write_manifest(const SweepConfig& config, std::ostream& os) {
  os << "version = " << kVersion << "\n";
  os << "algo = " << to_string(config.algo) << "\n";
  os << "problem = " << to_string(config.problem) << "\n";
  os << "dim = " << config.dim << "\n";
  os << "noise_std = " << detail::format_real(config.noise_std) << "\n";
  os << "gen_scale = " << detail::format_real(config.gen_scale) << "\n";
  os << "c = " << detail::format_real(config.min_eig) << "\n";
  os << "epsilon = " << detail::format_real(config.epsilon) << "\n";
  os << "budgets = ";
  for (std::size_t i = 0; i < config.budgets.size(); ++i)
    os << (i ? "," : "") << config.budgets[i];
  os << "\n";
  os << "runs = " << config.runs << "\n";
  os << "seed = " << config.master_seed << "\n";
  os << "fixed_problem = " << (config.fixed_problem ? 1 : 0) << "\n";
  os << "paper_literal_budget = " << (config.paper_literal_budget ? 1 : 0) << "\n";
  os << "clamp_bound = " << detail::format_real(config.clamp_bound) << "\n";
}

inline SweepConfig read_manifest(std::istream& is) {
  SweepConfig config;
  std::string line;
  while (std::getline(is, line)) {
    const auto sep = line.find('=');
    if (sep == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, sep));
    const std::string val = trim(line.substr(sep + 1));
    if (key == "algo") {
      auto a = parse_algorithm(val);
      if (!a) throw io_error("manifest: unknown algorithm '" + val + "'");
      config.algo = *a;
    } else if (key == "problem") {
      auto k = parse_problem_kind(val);
      if (!k) throw io_error("manifest: unknown problem kind '" + val + "'");
      config.problem = *k;
    } else if (key == "dim") config.dim = std::stoi(val);
    else if (key == "noise_std") config.noise_std = std::stod(val);
    else if (key == "gen_scale") config.gen_scale = std::stod(val);
    else if (key == "c") config.min_eig = std::stod(val);
    else if (key == "epsilon") config.epsilon = std::stod(val);
    else if (key == "budgets") {
      std::stringstream ss(val);
      std::string tok;
      config.budgets.clear();
      while (std::getline(ss, tok, ',')) config.budgets.push_back(std::stoull(tok));
    } else if (key == "runs") config.runs = std::stoi(val);
    else if (key == "seed") config.master_seed = std::stoull(val);
    else if (key == "fixed_problem") config.fixed_problem = val == "1";
    else if (key == "paper_literal_budget") config.paper_literal_budget = val == "1";
    else if (key == "clamp_bound") config.clamp_bound = std::stod(val);
  }
  return config;
}

inline constexpr const char* kPlotScript = R"(# log-log simple-regret curves; run:  gnuplot plot_regret.gp
set datafile separator ","
set logscale xy
set xlabel "evaluation budget N"
set ylabel "simple regret"
set key autotitle columnhead
set key left bottom
set terminal pngcairo size 900,600
set output "regret.png"
plot "summary.csv" using 1:2 with linespoints lw 2 title "mean", \
     ""            using 1:3 with linespoints lw 2 title "median", \
     ""            using 1:4 with lines dashtype 2 title "q10", \
     ""            using 1:5 with lines dashtype 2 title "q90"
)";

/// Writes records.csv, summary.csv, manifest.txt and plot_regret.gp into
/// config.out_dir (created if needed).
inline void write_outputs(const std::vector<ExperimentRecord>& records,
                          const std::vector<RegretSummary>& summaries, const SweepConfig& config) {
  if (config.out_dir.empty()) throw io_error("write_outputs: no output directory configured");
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + config.out_dir + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream os(std::filesystem::path(config.out_dir) / name, std::ios::binary);
    if (!os) throw io_error("cannot open " + (std::filesystem::path(config.out_dir) / name).string());
    return os;
  };
  {
    auto os = open("records.csv");
    write_records_csv(records, os);
    if (!os) throw io_error("write failed: records.csv in " + config.out_dir);
  }
  {
    auto os = open("summary.csv");
    write_summary_csv(summaries, os);
    if (!os) throw io_error("write failed: summary.csv in " + config.out_dir);
  }
  {
    auto os = open("manifest.txt");
    write_manifest(config, os);
    if (!os) throw io_error("write failed: manifest.txt in " + config.out_dir);
  }
  {
    auto os = open("plot_regret.gp");
    os << kPlotScript;
    if (!os) throw io_error("write failed: plot_regret.gp in " + config.out_dir);
  }
}

inline SweepConfig load_manifest_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open manifest: " + path);
  return read_manifest(is);
}

}  // namespace cops

#endif  // COPS_BENCH_HPP
