#ifndef COPS_OPTIMIZERS_HPP
#define COPS_OPTIMIZERS_HPP

// The comparison-based optimizers (COPS1, COPS, COPQUAD and its
// progressive-widening variant), model fitting with singularity handling and
// ball projection, and a Kiefer-Wolfowitz finite-difference baseline kept
// around purely as a benchmark comparison curve.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cops/cop.hpp"
#include "cops/errors.hpp"
#include "cops/linalg.hpp"
#include "cops/normal.hpp"
#include "cops/problem.hpp"
#include "cops/random.hpp"

namespace cops {

// --- budget planning --------------------------------------------------------

enum class AlgorithmId { cops1, cops, copquad, copquad_widening, kw };

inline std::string to_string(AlgorithmId a) {
  switch (a) {
    case AlgorithmId::cops1: return "cops1";
    case AlgorithmId::cops: return "cops";
    case AlgorithmId::copquad: return "copquad";
    case AlgorithmId::copquad_widening: return "copquad-widening";
    case AlgorithmId::kw: return "kw";
  }
  return "?";
}

inline std::optional<AlgorithmId> parse_algorithm(const std::string& s) {
  if (s == "cops1") return AlgorithmId::cops1;
  if (s == "cops") return AlgorithmId::cops;
  if (s == "copquad") return AlgorithmId::copquad;
  if (s == "copquad-widening") return AlgorithmId::copquad_widening;
  if (s == "kw") return AlgorithmId::kw;
  return std::nullopt;
}

/// How a budget N is split into COP calls: 2K evaluations per call.
/// Invariant: 2 * K * cop_calls + leftover = usable <= N, except under the
/// literal COPQUAD divisor d(d+3)-2, where the implied consumption exceeds N
/// (that discrepancy is the reason the default divisor is d(d+3)).
struct BudgetPlan {
  AlgorithmId algorithm;
  std::uint64_t total_budget = 0;   // the N that was requested
  int samples_per_point = 0;        // K
  int cop_calls = 0;
  std::uint64_t usable = 0;         // what the optimizer actually consumes
  std::uint64_t leftover = 0;       // total_budget - usable (0 if usable > N)
};

inline BudgetPlan budget_plan(AlgorithmId algo, int d, std::uint64_t n, bool paper_literal = false) {
  BudgetPlan plan;
  plan.algorithm = algo;
  plan.total_budget = n;
  switch (algo) {
    case AlgorithmId::cops1: {
      if (d != 1) throw contract_error("cops1: one-dimensional oracles only");
      if (n < 2 || n % 2 != 0) throw contract_error("cops1: budget must be even and >= 2");
      plan.samples_per_point = static_cast<int>(n / 2);
      plan.cop_calls = 1;
      plan.usable = n;
      break;
    }
    case AlgorithmId::cops: {
      if (d < 1) throw contract_error("cops: dimension must be >= 1");
      const std::uint64_t divisor = paper_literal ? 2 * static_cast<std::uint64_t>(d)
                                                  : static_cast<std::uint64_t>(d);
      std::uint64_t per_axis = (n / divisor) / 2 * 2;  // largest even <= N/divisor
      if (per_axis < 2)
        throw contract_error("cops: budget " + std::to_string(n) + " below minimum for dimension " +
                             std::to_string(d));
      plan.samples_per_point = static_cast<int>(per_axis / 2);
      plan.cop_calls = d;
      plan.usable = per_axis * d;
      break;
    }
    case AlgorithmId::copquad:
    case AlgorithmId::copquad_widening: {
      if (d < 1) throw contract_error("copquad: dimension must be >= 1");
      const std::uint64_t calls = 2ull * d + static_cast<std::uint64_t>(d) * (d - 1) / 2;
      const std::uint64_t denom = paper_literal
                                      ? static_cast<std::uint64_t>(d) * (d + 3) - 2
                                      : static_cast<std::uint64_t>(d) * (d + 3);
      const std::uint64_t k = n / denom;
      if (k < 1)
        throw contract_error("copquad: budget " + std::to_string(n) + " too small for dimension " +
                             std::to_string(d) + " (needs at least " + std::to_string(denom) + ")");
      plan.samples_per_point = static_cast<int>(k);
      plan.cop_calls = static_cast<int>(calls);
      plan.usable = 2 * k * calls;
      break;
    }
    case AlgorithmId::kw: {
      if (d < 1) throw contract_error("kw: dimension must be >= 1");
      const std::uint64_t iters = n / (2ull * d);
      if (iters < 1) throw contract_error("kw: budget below 2d");
      plan.samples_per_point = 0;
      plan.cop_calls = 0;
      plan.usable = iters * 2ull * d;
      break;
    }
  }
  plan.leftover = plan.usable <= n ? n - plan.usable : 0;
  return plan;
}

// --- widening schedule ------------------------------------------------------

/// Clamp half-width as a function of the budget.
struct WideningSchedule {
  enum class Mode { fixed, slow_growth };
  Mode mode = Mode::fixed;
  double base = 5.0;
};

inline double widening_bound(std::uint64_t n, const WideningSchedule& schedule) {
  if (n < 1) throw contract_error("widening_bound: budget must be >= 1");
  if (schedule.mode == WideningSchedule::Mode::fixed) return schedule.base;
  const double nn = static_cast<double>(n);
  return schedule.base + std::log(1.0 + std::log(1.0 + std::log(1.0 + nn)));
}

// --- COPS1 / COPS -----------------------------------------------------------

namespace detail {

template <class OracleD>
class OracleAxisRestriction {
 public:
  OracleAxisRestriction(OracleD& oracle, int dim, int axis)
      : oracle_(&oracle), axis_(axis), point_(dim, 0.0) {
    if (axis < 0 || axis >= dim) throw contract_error("axis restriction: index out of range");
  }

  double operator()(double t, RandomStream& stream, EvaluationCounter& counter) const {
    point_[axis_] = t;
    const double v = (*oracle_)(std::span<const double>(point_), stream, counter);
    point_[axis_] = 0.0;
    return v;
  }

 private:
  OracleD* oracle_;
  int axis_;
  mutable std::vector<double> point_;
};

}  // namespace detail

/// COPS1: one COP call on the pair (1, -1), inverted through the clamped
/// quantile with scale sqrt(8). Consumes exactly N evaluations; the returned
/// estimate lies in [-1, 1] (f in {0,1} saturates at the endpoints).
template <class Oracle1D>
double cops1(Oracle1D&& oracle, std::uint64_t n, RandomStream& stream, EvaluationCounter& counter) {
  const BudgetPlan plan = budget_plan(AlgorithmId::cops1, 1, n);
  RandomStream cop_stream = stream.substream(0);
  const FrequencyEstimate f =
      cop1d(plan.samples_per_point, 1.0, -1.0, oracle, cop_stream, counter);
  return clamped_quantile(f.value, ClampBound(1.0), kSqrt8);
}

/// COPS: COPS1 on each axis restriction. Each axis gets the largest even
/// budget <= N/d (<= N/2d under the paper-literal flag), so total consumption
/// never exceeds N.
template <class OracleD>
std::vector<double> cops(OracleD&& oracle, int d, std::uint64_t n, RandomStream& stream,
                         EvaluationCounter& counter, bool paper_literal = false) {
  const BudgetPlan plan = budget_plan(AlgorithmId::cops, d, n, paper_literal);
  const std::uint64_t per_axis = 2ull * plan.samples_per_point;
  std::vector<double> x_hat(d, 0.0);
  for (int i = 0; i < d; ++i) {
    detail::OracleAxisRestriction<std::remove_reference_t<OracleD>> restricted(oracle, d, i);
    RandomStream axis_stream = stream.substream(static_cast<std::uint64_t>(i));
    x_hat[i] = cops1(restricted, per_axis, axis_stream, counter);
  }
  return x_hat;
}

// --- model fitting and solving (COPQUAD) ------------------------------------

enum class ProbeKind { signed_axis, origin_to_axis, origin_to_axis_pair };

struct ProbeLabel {
  ProbeKind kind;
  int i = 0;
  int j = 0;  // only meaningful for origin_to_axis_pair, with i < j
};

struct LabeledFrequency {
  ProbeLabel label;
  double value = 0.0;
};

/// Clamped estimates of A/D (symmetric) and B/D.
struct ModelEstimate {
  Matrix A_hat;
  std::vector<double> B_hat;
  double bound = 5.0;
};

/// Assembles the model from the 2d + d(d-1)/2 probe frequencies:
///   B_hat_i   from f(-e_i, e_i)      at scale sqrt(2),
///   theta_ii  from f(0, e_i)        at scale 1/sqrt(2),  A_hat_ii = theta_ii - B_hat_i,
///   theta_ij  from f(0, e_i + e_j)  at scale 1/sqrt(2),
///   A_hat_ij = (theta_ij - B_hat_i - A_hat_ii - B_hat_j - A_hat_jj) / 2, mirrored.
inline ModelEstimate fit_model_from_frequencies(std::span<const LabeledFrequency> freqs, int d,
                                                ClampBound bound) {
  if (d < 1) throw contract_error("fit_model_from_frequencies: dimension must be >= 1");
  std::vector<std::optional<double>> f_signed(d), f_axis(d);
  Matrix f_pair(d, d);
  std::vector<std::vector<bool>> has_pair(d, std::vector<bool>(d, false));

  for (const auto& lf : freqs) {
    const auto& lb = lf.label;
    switch (lb.kind) {
      case ProbeKind::signed_axis:
        if (lb.i < 0 || lb.i >= d || f_signed[lb.i])
          throw contract_error("fit_model_from_frequencies: bad or duplicate (-e_i, e_i) label");
        f_signed[lb.i] = lf.value;
        break;
      case ProbeKind::origin_to_axis:
        if (lb.i < 0 || lb.i >= d || f_axis[lb.i])
          throw contract_error("fit_model_from_frequencies: bad or duplicate (0, e_i) label");
        f_axis[lb.i] = lf.value;
        break;
      case ProbeKind::origin_to_axis_pair:
        if (lb.i < 0 || lb.j <= lb.i || lb.j >= d || has_pair[lb.i][lb.j])
          throw contract_error("fit_model_from_frequencies: bad or duplicate (0, e_i+e_j) label");
        f_pair(lb.i, lb.j) = lf.value;
        has_pair[lb.i][lb.j] = true;
        break;
    }
  }
  for (int i = 0; i < d; ++i) {
    if (!f_signed[i] || !f_axis[i])
      throw contract_error("fit_model_from_frequencies: missing axis pair label");
    for (int j = i + 1; j < d; ++j)
      if (!has_pair[i][j]) throw contract_error("fit_model_from_frequencies: missing (0, e_i+e_j) label");
  }

  ModelEstimate model;
  model.bound = bound.value;
  model.B_hat.assign(d, 0.0);
  model.A_hat = Matrix(d, d);

  std::vector<double> theta_ii(d, 0.0);
  for (int i = 0; i < d; ++i) {
    model.B_hat[i] = clamped_quantile(*f_signed[i], bound, kSqrt2);
    theta_ii[i] = clamped_quantile(*f_axis[i], bound, kInvSqrt2);
    model.A_hat(i, i) = theta_ii[i] - model.B_hat[i];
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double theta_ij = clamped_quantile(f_pair(i, j), bound, kInvSqrt2);
      const double a_ij = 0.5 * (theta_ij - model.B_hat[i] - model.A_hat(i, i) - model.B_hat[j] -
                                 model.A_hat(j, j));
      model.A_hat(i, j) = a_ij;
      model.A_hat(j, i) = a_ij;
    }
  }
  return model;
}

struct ModelSolution {
  std::vector<double> x_hat;
  bool singular_branch = false;
  bool projection_hit = false;
};

/// Solves 2 A_hat x = -B_hat^T by elimination with partial pivoting; a pivot
/// below 1e-9 * max(1, max|A_hat entry|) takes the singular branch (x = 0).
/// The result is radially projected onto the closed ball of projection_radius.
inline ModelSolution solve_model(const ModelEstimate& model, double projection_radius = 1.0) {
  const int d = static_cast<int>(model.B_hat.size());
  ModelSolution sol;

  std::vector<double> rhs(model.B_hat);
  for (double& v : rhs) v *= -0.5;
  auto x = solve_partial_pivot(model.A_hat, std::move(rhs), 1e-9);
  if (x) {
    sol.x_hat = std::move(*x);
  } else {
    sol.singular_branch = true;
    sol.x_hat.assign(d, 0.0);
  }

  const double nrm = norm2(sol.x_hat);
  if (nrm > projection_radius) {
    const double scale = projection_radius / nrm;
    for (double& v : sol.x_hat) v *= scale;
    sol.projection_hit = true;
  }
  return sol;
}

struct CopquadResult {
  std::vector<double> x_hat;
  ModelEstimate model;
  bool singular_branch = false;
  bool projection_hit = false;
};

/// COPQUAD: the 2d + d(d-1)/2 COP calls at K samples per point, model fit
/// with clamp half-width schedule(N), then the model solve with projection
/// onto the unit ball. Each COP call gets its own substream.
template <class OracleD>
CopquadResult copquad(OracleD&& oracle, int d, std::uint64_t n, RandomStream& stream,
                      EvaluationCounter& counter, const WideningSchedule& schedule = {},
                      bool paper_literal = false) {
  const BudgetPlan plan = budget_plan(AlgorithmId::copquad, d, n, paper_literal);
  const int k = plan.samples_per_point;
  const ClampBound bound(widening_bound(n, schedule));

  std::vector<double> origin(d, 0.0), lhs(d, 0.0), rhs_point(d, 0.0);
  std::vector<LabeledFrequency> freqs;
  freqs.reserve(static_cast<std::size_t>(plan.cop_calls));
  std::uint64_t call_index = 0;

  auto run_cop = [&](std::span<const double> x, std::span<const double> y) {
    RandomStream cop_stream = stream.substream(call_index++);
    return cop(k, x, y, oracle, cop_stream, counter).value;
  };

  for (int i = 0; i < d; ++i) {
    lhs.assign(d, 0.0);
    rhs_point.assign(d, 0.0);
    lhs[i] = -1.0;
    rhs_point[i] = 1.0;
    freqs.push_back({{ProbeKind::signed_axis, i, 0}, run_cop(lhs, rhs_point)});
    freqs.push_back({{ProbeKind::origin_to_axis, i, 0}, run_cop(origin, rhs_point)});
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      rhs_point.assign(d, 0.0);
      rhs_point[i] = 1.0;
      rhs_point[j] = 1.0;
      freqs.push_back({{ProbeKind::origin_to_axis_pair, i, j}, run_cop(origin, rhs_point)});
    }
  }

  CopquadResult result;
  result.model = fit_model_from_frequencies(freqs, d, bound);
  ModelSolution sol = solve_model(result.model, 1.0);
  result.x_hat = std::move(sol.x_hat);
  result.singular_branch = sol.singular_branch;
  result.projection_hit = sol.projection_hit;
  return result;
}

// --- Kiefer-Wolfowitz baseline ----------------------------------------------

struct KwOptions {
  double gain_a = 1.0;   // a_n = gain_a / n
  double step_c = 1.0;   // c_n = step_c / n^(1/4)
};

/// Two-point finite-difference stochastic approximation; comparison curve
/// only, not part of any comparison-based guarantee.
template <class OracleD>
std::vector<double> kw_baseline(OracleD&& oracle, int d, std::uint64_t n, RandomStream& stream,
                                EvaluationCounter& counter, const KwOptions& opts = {}) {
  const BudgetPlan plan = budget_plan(AlgorithmId::kw, d, n);
  const std::uint64_t iters = plan.usable / (2ull * d);

  std::vector<double> x(d, 0.0), probe(d, 0.0), grad(d, 0.0);
  for (std::uint64_t it = 1; it <= iters; ++it) {
    const double nn = static_cast<double>(it);
    const double c_n = opts.step_c / std::pow(nn, 0.25);
    const double a_n = opts.gain_a / nn;
    for (int i = 0; i < d; ++i) {
      probe = x;
      probe[i] = x[i] + c_n;
      const double fp = oracle(std::span<const double>(probe), stream, counter);
      probe[i] = x[i] - c_n;
      const double fm = oracle(std::span<const double>(probe), stream, counter);
      grad[i] = (fp - fm) / (2.0 * c_n);
    }
    for (int i = 0; i < d; ++i) x[i] -= a_n * grad[i];
    const double nrm = norm2(x);
    if (nrm > 1.0)
      for (double& v : x) v /= nrm;
  }
  return x;
}

// --- uniform run entry point --------------------------------------------------

struct RunOptions {
  bool paper_literal_budget = false;
  WideningSchedule widening{};  // used by copquad-widening (and copquad for custom base)
  KwOptions kw{};
};

struct RunResult {
  std::vector<double> x_hat;
  std::uint64_t consumed = 0;
  bool singular_branch = false;
  bool projection_hit = false;
  std::optional<ModelEstimate> model;
};

/// Runs an optimizer on a problem with a fresh counter, checking the budget
/// ledger afterwards: consumption must match the plan exactly.
inline RunResult run_optimizer(const Problem& problem, AlgorithmId algo, std::uint64_t n,
                               RandomStream stream, const RunOptions& opts = {}) {
  const int d = dimension(problem);
  const BudgetPlan plan = budget_plan(algo, algo == AlgorithmId::cops1 ? 1 : d, n,
                                      opts.paper_literal_budget);
  EvaluationCounter counter(std::max<std::uint64_t>(n, plan.usable));

  auto oracle = [&](std::span<const double> x, RandomStream& rs, EvaluationCounter& ctr) {
    return evaluate_noisy(problem, x, rs, ctr);
  };

  RunResult result;
  switch (algo) {
    case AlgorithmId::cops1: {
      if (d != 1) throw contract_error("cops1 requires a one-dimensional problem");
      detail::OracleAxisRestriction<decltype(oracle)> restricted(oracle, 1, 0);
      result.x_hat = {cops1(restricted, n, stream, counter)};
      break;
    }
    case AlgorithmId::cops: {
      result.x_hat = cops(oracle, d, n, stream, counter, opts.paper_literal_budget);
      break;
    }
    case AlgorithmId::copquad:
    case AlgorithmId::copquad_widening: {
      WideningSchedule schedule = opts.widening;
      schedule.mode = algo == AlgorithmId::copquad_widening ? WideningSchedule::Mode::slow_growth
                                                            : WideningSchedule::Mode::fixed;
      CopquadResult r = copquad(oracle, d, n, stream, counter, schedule, opts.paper_literal_budget);
      result.x_hat = std::move(r.x_hat);
      result.singular_branch = r.singular_branch;
      result.projection_hit = r.projection_hit;
      result.model = std::move(r.model);
      break;
    }
    case AlgorithmId::kw: {
      result.x_hat = kw_baseline(oracle, d, n, stream, counter, opts.kw);
      break;
    }
  }
  result.consumed = counter.consumed();
  if (result.consumed != plan.usable)
    throw std::logic_error("budget ledger mismatch: consumed " + std::to_string(result.consumed) +
                           ", planned " + std::to_string(plan.usable));
  return result;
}

}  // namespace cops

#endif  // COPS_OPTIMIZERS_HPP
