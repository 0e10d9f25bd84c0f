// Acceptance suite: one test case per criterion, each self-contained and
// runnable alone (ctest registers them individually). A listener prints one
// PASS/FAIL line per criterion.

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "cops/bench.hpp"
#include "cops/cop.hpp"
#include "cops/normal.hpp"
#include "cops/optimizers.hpp"
#include "cops/problem.hpp"

using Catch::Approx;
using cops::AlgorithmId;
using cops::EvaluationCounter;
using cops::RandomStream;
using cops::SweepConfig;

namespace {

class CriterionReporter : public Catch::EventListenerBase {
 public:
  using Catch::EventListenerBase::EventListenerBase;
  void testCaseEnded(const Catch::TestCaseStats& stats) override {
    std::printf("%s: %s\n", stats.testInfo->name.c_str(),
                stats.totals.assertions.allOk() ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};
CATCH_REGISTER_LISTENER(CriterionReporter)

// Deterministic parallel map over run indices; assertions stay on the caller.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  std::atomic<int> next{0};
  auto body = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  if (workers == 1) {
    body();
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
}

// --- quadrature oracle for the CDF (independent of the erfc path) -----------

const double kGLNodes[10] = {0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
                             0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
                             0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
                             0.9931285991850949};
const double kGLWeights[10] = {0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
                               0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
                               0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
                               0.0176140071391521};

double integrate_density(double lo, double hi) {
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.25)));
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    const double mid = a + 0.5 * h;
    const double half = 0.5 * h;
    double panel = 0.0;
    for (int i = 0; i < 10; ++i)
      panel += kGLWeights[i] * (cops::std_normal_pdf(mid - half * kGLNodes[i]) +
                                cops::std_normal_pdf(mid + half * kGLNodes[i]));
    total += panel * half;
  }
  return total;
}

double cdf_quadrature(double x) {
  return x >= 0.0 ? 0.5 + integrate_density(0.0, x) : 0.5 - integrate_density(x, 0.0);
}

// --- shared sweep configurations ---------------------------------------------

std::vector<std::uint64_t> dyadic(int lo, int hi) {
  std::vector<std::uint64_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(1ull << k);
  return out;
}

// Fig-1a regime: theorem-compliant problems at D = 1.
SweepConfig fig1a_config() {
  SweepConfig c;
  c.algo = AlgorithmId::copquad;
  c.dim = 2;
  c.noise_std = 1.0;
  c.min_eig = 0.1;
  c.epsilon = 0.05;
  c.budgets = dyadic(10, 18);
  c.runs = 50;
  c.master_seed = 20240701;
  return c;
}

// Small-noise stagnation regime: curvature scale above the noise level so the
// true Delta/D of the (0, e_i+e_j) probe sits beyond the +-5 clamp for the
// median problem (concentrated spectrum; epsilon trims B via the rejection).
SweepConfig stagnation_config() {
  SweepConfig c;
  c.algo = AlgorithmId::copquad;
  c.dim = 2;
  c.noise_std = 0.65;
  c.gen_scale = 1.8;
  c.min_eig = 1.71;
  c.epsilon = 0.7;
  c.budgets = dyadic(10, 18);
  c.runs = 50;
  c.master_seed = 20240702;
  return c;
}

double median_at(const std::vector<cops::RegretSummary>& summaries, std::uint64_t budget) {
  for (const auto& s : summaries)
    if (s.budget == budget) return s.median;
  throw std::logic_error("budget missing from summaries");
}

}  // namespace

TEST_CASE("criterion 01: COP kernel equivalence", "[acceptance][c01]") {
  RandomStream stream(101, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(stream.next_u64() % 64);
    std::vector<double> xs(k), ys(k);
    // quantized values force ties; continuous values cover the generic case
    const bool quantize = trial % 2 == 0;
    for (auto& v : xs) v = quantize ? (stream.next_u64() % 16) * 0.25 : stream.next_gaussian();
    for (auto& v : ys) v = quantize ? (stream.next_u64() % 16) * 0.25 : stream.next_gaussian();
    std::uint64_t brute = 0;
    for (double x : xs)
      for (double y : ys)
        if (x < y) ++brute;
    REQUIRE(cops::pairwise_win_fraction(xs, ys).win_count == brute);
  }
}

TEST_CASE("criterion 02: CDF fidelity and quantile round trip", "[acceptance][c02]") {
  double max_cdf_err = 0.0, max_rt_err = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -8.0 + 16.0 * i / 10000.0;
    max_cdf_err = std::max(max_cdf_err, std::abs(cops::std_normal_cdf(x) - cdf_quadrature(x)));
    max_rt_err =
        std::max(max_rt_err, std::abs(cops::std_normal_quantile(cops::std_normal_cdf(x)) - x));
  }
  INFO("max |Phi_impl - Phi_quadrature| = " << max_cdf_err);
  INFO("max quantile round-trip error  = " << max_rt_err);
  CHECK(max_cdf_err <= 1e-10);
  CHECK(max_rt_err <= 1e-8);
}

TEST_CASE("criterion 03: frequency mean law", "[acceptance][c03]") {
  RandomStream master(103, 0);
  struct Combo {
    cops::NoisyQuadraticProblem problem;
    std::vector<double> x, y;
    double expected;
    double mean = 0.0, se = 0.0;
  };
  std::vector<Combo> combos;
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 3;
    const double noise = 0.5 + 0.1 * t;
    RandomStream gen = master.substream(t);
    auto p = cops::generate_problem(d, noise, noise / 10.0, 0.05, gen);
    std::vector<double> x(d), y(d);
    for (auto& v : x) v = gen.next_uniform(-0.6, 0.6);
    for (auto& v : y) v = gen.next_uniform(-0.6, 0.6);
    const double delta = cops::evaluate_true(p, y) - cops::evaluate_true(p, x);
    const double expected = cops::std_normal_cdf(delta / (cops::kSqrt2 * noise));
    combos.push_back({std::move(p), std::move(x), std::move(y), expected});
  }

  constexpr int kCalls = 10000;
  constexpr int kSamples = 50;
  parallel_for(static_cast<int>(combos.size()), [&](int idx) {
    auto& combo = combos[idx];
    auto oracle = [&](std::span<const double> pt, RandomStream& rs, EvaluationCounter& ctr) {
      return cops::evaluate_noisy(combo.problem, pt, rs, ctr);
    };
    double sum = 0, sumsq = 0;
    for (int call = 0; call < kCalls; ++call) {
      RandomStream stream(103, cops::derive_stream_id(idx + 1, call));
      EvaluationCounter counter(2 * kSamples);
      const double f = cops::cop(kSamples, combo.x, combo.y, oracle, stream, counter).value;
      sum += f;
      sumsq += f * f;
    }
    combo.mean = sum / kCalls;
    const double var = (sumsq - kCalls * combo.mean * combo.mean) / (kCalls - 1);
    combo.se = std::sqrt(std::max(var, 1e-300) / kCalls);
  });

  for (std::size_t i = 0; i < combos.size(); ++i) {
    INFO("combo " << i << ": mean " << combos[i].mean << " vs Phi " << combos[i].expected
                  << " (se " << combos[i].se << ")");
    REQUIRE(std::abs(combos[i].mean - combos[i].expected) <= 4.0 * combos[i].se);
  }
}

TEST_CASE("criterion 04: frequency variance law", "[acceptance][c04]") {
  for (int k : {10, 50, 200}) {
    cops::SphereProblem p({0.15});
    auto oracle = [&](std::span<const double> pt, RandomStream& rs, EvaluationCounter& ctr) {
      return cops::evaluate_noisy(p, pt, rs, ctr);
    };
    constexpr int kReps = 10000;
    std::vector<double> fs(kReps);
    parallel_for(kReps, [&](int rep) {
      RandomStream stream(104, cops::derive_stream_id(k, rep));
      EvaluationCounter counter(2ull * k);
      const std::vector<double> x{1.0}, y{-1.0};
      fs[rep] = cops::cop(k, x, y, oracle, stream, counter).value;
    });
    double sum = 0, sumsq = 0;
    for (double f : fs) {
      sum += f;
      sumsq += f * f;
    }
    const double mean = sum / kReps;
    const double var = (sumsq - kReps * mean * mean) / (kReps - 1);
    const double se_var = var * std::sqrt(2.0 / (kReps - 1));
    INFO("K = " << k << ": Var(f) = " << var << ", bound = " << 1.0 / (2.0 * k) << " + 3*" << se_var);
    REQUIRE(var <= 1.0 / (2.0 * k) + 3.0 * se_var);
  }
}

TEST_CASE("criterion 05: exact-frequency model recovery", "[acceptance][c05]") {
  RandomStream master(105, 0);
  int checked = 0;
  for (int d : {1, 2, 3, 5}) {
    for (int t = 0; t < 25; ++t) {
      RandomStream gen = master.substream(d * 1000 + t);
      auto p = cops::generate_problem(d, 1.0 + 0.05 * t, 0.1, 0.05, gen);

      std::vector<cops::LabeledFrequency> freqs;
      const double denom = cops::kSqrt2 * p.noise_std;
      std::vector<double> zero(d, 0.0), a(d), b(d);
      auto f_of = [&](std::span<const double> u, std::span<const double> v) {
        return cops::std_normal_cdf((cops::evaluate_true(p, v) - cops::evaluate_true(p, u)) / denom);
      };
      for (int i = 0; i < d; ++i) {
        a.assign(d, 0.0);
        b.assign(d, 0.0);
        a[i] = -1.0;
        b[i] = 1.0;
        freqs.push_back({{cops::ProbeKind::signed_axis, i, 0}, f_of(a, b)});
        freqs.push_back({{cops::ProbeKind::origin_to_axis, i, 0}, f_of(zero, b)});
      }
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          b.assign(d, 0.0);
          b[i] = 1.0;
          b[j] = 1.0;
          freqs.push_back({{cops::ProbeKind::origin_to_axis_pair, i, j}, f_of(zero, b)});
        }

      auto model = cops::fit_model_from_frequencies(freqs, d, cops::ClampBound(5.0));
      double a_err = 0, b_err = 0;
      for (int i = 0; i < d; ++i) {
        const double db = model.B_hat[i] - p.B[i] / p.noise_std;
        b_err += db * db;
        for (int j = 0; j < d; ++j) {
          const double da = model.A_hat(i, j) - p.A(i, j) / p.noise_std;
          a_err += da * da;
        }
      }
      REQUIRE(std::sqrt(a_err) <= 1e-9);
      REQUIRE(std::sqrt(b_err) <= 1e-9);
      ++checked;
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("criterion 06: COPS1 regret rate", "[acceptance][c06]") {
  SweepConfig config;
  config.algo = AlgorithmId::cops1;
  config.dim = 1;
  config.budgets = dyadic(8, 16);
  config.runs = 50;
  config.master_seed = 106;
  auto fit = cops::fit_loglog_slope(cops::aggregate(cops::sweep(config)));
  INFO("COPS1 median-regret slope = " << fit.slope);
  CHECK(fit.slope >= -1.3);
  CHECK(fit.slope <= -0.7);
}

TEST_CASE("criterion 07: COPQUAD rate at D = 1", "[acceptance][c07]") {
  auto fit = cops::fit_loglog_slope(cops::aggregate(cops::sweep(fig1a_config())));
  INFO("COPQUAD D=1 median-regret slope = " << fit.slope);
  CHECK(fit.slope >= -1.25);
  CHECK(fit.slope <= -0.75);
}

TEST_CASE("criterion 08: COPQUAD rate at D = 10", "[acceptance][c08]") {
  auto config = fig1a_config();
  config.noise_std = 10.0;
  config.gen_scale = 0.0;  // generate at D = 10
  config.min_eig = 1.0;
  config.master_seed = 108;
  auto fit = cops::fit_loglog_slope(cops::aggregate(cops::sweep(config)));
  INFO("COPQUAD D=10 median-regret slope = " << fit.slope);
  CHECK(fit.slope >= -1.25);
  CHECK(fit.slope <= -0.75);
}

TEST_CASE("criterion 09: small-noise stagnation", "[acceptance][c09]") {
  auto stag = cops::aggregate(cops::sweep(stagnation_config()));
  const double stag_ratio = median_at(stag, 1ull << 18) / median_at(stag, 1ull << 14);
  INFO("stagnation tail ratio (2^18 vs 2^14) = " << stag_ratio);

  auto healthy = cops::aggregate(cops::sweep(fig1a_config()));
  const double healthy_ratio = median_at(healthy, 1ull << 18) / median_at(healthy, 1ull << 14);
  INFO("compliant-config ratio on the same span = " << healthy_ratio);

  CHECK(stag_ratio >= 0.3);
  CHECK(healthy_ratio <= 0.15);
}

TEST_CASE("criterion 10: progressive widening remedy", "[acceptance][c10]") {
  auto fixed_config = stagnation_config();
  auto widened_config = stagnation_config();
  widened_config.algo = AlgorithmId::copquad_widening;
  // identical master seed: run streams and generated problems pair up exactly

  auto fixed_med = median_at(cops::aggregate(cops::sweep(fixed_config)), 1ull << 18);
  auto widened_med = median_at(cops::aggregate(cops::sweep(widened_config)), 1ull << 18);
  INFO("median regret at 2^18: fixed bound = " << fixed_med << ", widened = " << widened_med);
  CHECK(widened_med < fixed_med);
}

TEST_CASE("criterion 11: estimator mean-squared-error rate", "[acceptance][c11]") {
  SweepConfig config = fig1a_config();
  config.fixed_problem = true;
  config.master_seed = 111;
  const auto problem_variant = cops::fixed_problem(config);
  const auto& problem = std::get<cops::NoisyQuadraticProblem>(problem_variant);

  const auto budgets = dyadic(10, 18);
  constexpr int kRuns = 200;
  std::vector<cops::RegretSummary> a_mse(budgets.size()), b_mse(budgets.size());

  for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
    std::vector<double> a_err(kRuns), b_err(kRuns);
    parallel_for(kRuns, [&](int run) {
      RandomStream stream(config.master_seed,
                          cops::derive_stream_id(budgets[bi], static_cast<std::uint64_t>(run)));
      auto result = cops::run_optimizer(problem_variant, AlgorithmId::copquad, budgets[bi],
                                        stream.substream(1));
      const auto& model = *result.model;
      double ea = 0, eb = 0;
      for (int i = 0; i < problem.dim; ++i) {
        const double db = model.B_hat[i] - problem.B[i] / problem.noise_std;
        eb += db * db;
        for (int j = 0; j < problem.dim; ++j) {
          const double da = model.A_hat(i, j) - problem.A(i, j) / problem.noise_std;
          ea += da * da;
        }
      }
      a_err[run] = ea;
      b_err[run] = eb;
    });
    double sa = 0, sb = 0;
    for (int r = 0; r < kRuns; ++r) {
      sa += a_err[r];
      sb += b_err[r];
    }
    a_mse[bi].budget = budgets[bi];
    a_mse[bi].mean = sa / kRuns;
    b_mse[bi].budget = budgets[bi];
    b_mse[bi].mean = sb / kRuns;
  }

  const auto a_fit = cops::fit_loglog_slope(a_mse, cops::SummaryStatistic::mean);
  const auto b_fit = cops::fit_loglog_slope(b_mse, cops::SummaryStatistic::mean);
  INFO("||A_hat - A/D||_F^2 slope = " << a_fit.slope);
  INFO("||B_hat - B/D||^2   slope = " << b_fit.slope);
  CHECK(a_fit.slope >= -1.3);
  CHECK(a_fit.slope <= -0.7);
  CHECK(b_fit.slope >= -1.3);
  CHECK(b_fit.slope <= -0.7);
}

TEST_CASE("criterion 12: COPS dimension scaling", "[acceptance][c12]") {
  auto median_regret = [](int d) {
    SweepConfig config;
    config.algo = AlgorithmId::cops;
    config.dim = d;
    config.budgets = {1ull << 14};
    config.runs = 100;
    config.master_seed = 112;
    return cops::aggregate(cops::sweep(config))[0].median;
  };
  const double m1 = median_regret(1);
  const double m8 = median_regret(8);
  const double ratio = m8 / m1;
  INFO("median regret d=1: " << m1 << ", d=8: " << m8 << ", ratio = " << ratio);
  // The stated window tracks the O(d/N) theorem; the per-axis budget split
  // makes the sum of per-axis regrets scale ~ d^2/N (see the unit suite).
  CHECK(ratio >= 4.0);
  CHECK(ratio <= 16.0);
}

TEST_CASE("criterion 13: manifest reproducibility across worker counts", "[acceptance][c13]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cops_acceptance_c13";
  fs::remove_all(dir);

  SweepConfig config;
  config.algo = AlgorithmId::copquad;
  config.dim = 2;
  config.noise_std = 1.0;
  config.min_eig = 0.1;
  config.budgets = dyadic(10, 13);
  config.runs = 8;
  config.master_seed = 113;
  config.workers = 2;
  config.out_dir = (dir / "orig").string();

  auto records = cops::sweep(config);
  cops::write_outputs(records, cops::aggregate(records), config);

  auto read_file = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  const std::string reference = read_file(fs::path(config.out_dir) / "records.csv");
  REQUIRE(!reference.empty());

  for (int workers : {1, 4, 16}) {
    auto replay = cops::load_manifest_file((fs::path(config.out_dir) / "manifest.txt").string());
    replay.workers = workers;
    replay.out_dir = (dir / ("w" + std::to_string(workers))).string();
    auto again = cops::sweep(replay);
    cops::write_outputs(again, cops::aggregate(again), replay);
    INFO("workers = " << workers);
    REQUIRE(read_file(fs::path(replay.out_dir) / "records.csv") == reference);
  }
  fs::remove_all(dir);
}
