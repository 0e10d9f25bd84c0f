#ifndef COPS_PROBLEM_HPP
#define COPS_PROBLEM_HPP

// Objective definitions, noisy and noiseless evaluation, budget accounting,
// random problem generation and axis restriction.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cops/errors.hpp"
#include "cops/linalg.hpp"
#include "cops/random.hpp"

namespace cops {

/// Tracks noisy-oracle consumption against an allotted budget.
class EvaluationCounter {
 public:
  explicit EvaluationCounter(std::uint64_t allotted) : allotted_(allotted) {}

  std::uint64_t allotted() const { return allotted_; }
  std::uint64_t consumed() const { return consumed_; }
  std::uint64_t remaining() const { return allotted_ - consumed_; }

  void consume(std::uint64_t n = 1) {
    if (consumed_ + n > allotted_)
      throw budget_error("evaluation budget exhausted: " + std::to_string(consumed_) + " consumed, " +
                         std::to_string(n) + " requested, " + std::to_string(allotted_) + " allotted");
    consumed_ += n;
  }

 private:
  std::uint64_t allotted_;
  std::uint64_t consumed_ = 0;
};

/// x -> ||x - x*||^2 with additive Gaussian noise (std 1 in the theorem setting).
struct SphereProblem {
  int dim = 1;
  std::vector<double> x_star;
  double noise_std = 1.0;

  SphereProblem(std::vector<double> optimum_point, double noise = 1.0)
      : dim(static_cast<int>(optimum_point.size())), x_star(std::move(optimum_point)), noise_std(noise) {
    if (dim < 1) throw contract_error("SphereProblem: dimension must be >= 1");
    if (!(noise_std > 0.0)) throw contract_error("SphereProblem: noise std must be positive");
    for (double c : x_star)
      if (!(c >= -1.0 && c <= 1.0)) throw contract_error("SphereProblem: optimum coordinate outside [-1,1]");
    if (dim > 1 && norm2(x_star) > 1.0 + 1e-12)
      throw contract_error("SphereProblem: optimum outside the unit ball");
  }
};

/// x -> x^T A x + B x + C with additive Gaussian noise of std D.
struct NoisyQuadraticProblem {
  int dim = 1;
  Matrix A;                 // symmetric, stored exactly symmetric
  std::vector<double> B;    // row vector
  double C = 0.0;
  double noise_std = 1.0;   // D
  double min_eigenvalue = 0.0;  // c, known from construction
  double epsilon = 0.0;         // optimum margin inside the unit ball
  bool theorem_compliant = false;
};

namespace detail {

inline void require_symmetric(const Matrix& a) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != a(j, i)) throw contract_error("quadratic problem: A must be stored symmetric");
}

}  // namespace detail

/// Builds a quadratic problem from explicit parameters, recomputing the
/// compliance flag (||A||2/D <= 1, ||B||/D <= 1, |C|/D <= 1, ||x*|| <= 1-eps).
inline NoisyQuadraticProblem make_quadratic_problem(Matrix a, std::vector<double> b, double c_term,
                                                    double noise_std, double epsilon = 0.0) {
  const int d = a.rows();
  if (d < 1 || a.cols() != d || static_cast<int>(b.size()) != d)
    throw contract_error("quadratic problem: inconsistent dimensions");
  if (!(noise_std > 0.0)) throw contract_error("quadratic problem: noise std must be positive");
  detail::require_symmetric(a);

  NoisyQuadraticProblem p;
  p.dim = d;
  p.A = std::move(a);
  p.B = std::move(b);
  p.C = c_term;
  p.noise_std = noise_std;
  p.epsilon = epsilon;

  const auto eig = symmetric_eigenvalues(p.A);
  p.min_eigenvalue = eig.front();
  if (!(p.min_eigenvalue > 0.0))
    throw contract_error("quadratic problem: A must be positive definite");

  const double spectral = std::max(std::abs(eig.front()), std::abs(eig.back()));
  auto x_opt = solve_partial_pivot(p.A, [&] {
    std::vector<double> rhs(p.B);
    for (double& v : rhs) v *= -0.5;
    return rhs;
  }());
  const double x_norm = x_opt ? norm2(*x_opt) : std::numeric_limits<double>::infinity();
  p.theorem_compliant = spectral <= p.noise_std * (1 + 1e-12) &&
                        norm2(p.B) <= p.noise_std * (1 + 1e-12) &&
                        std::abs(p.C) <= p.noise_std * (1 + 1e-12) &&
                        x_norm <= 1.0 - epsilon + 1e-12;
  return p;
}

/// Same problem run at a different noise level (the compliance flag is
/// recomputed; this is how the small-noise regimes are set up).
inline NoisyQuadraticProblem with_noise_std(const NoisyQuadraticProblem& p, double noise_std) {
  return make_quadratic_problem(p.A, p.B, p.C, noise_std, p.epsilon);
}

using Problem = std::variant<SphereProblem, NoisyQuadraticProblem>;

inline int dimension(const Problem& p) {
  return std::visit([](const auto& q) { return q.dim; }, p);
}

inline double noise_std(const Problem& p) {
  return std::visit([](const auto& q) { return q.noise_std; }, p);
}

/// Exact noiseless fitness. Does not touch any counter.
inline double evaluate_true(const SphereProblem& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.dim) throw contract_error("evaluate_true: wrong point dimension");
  double s = 0.0;
  for (int i = 0; i < p.dim; ++i) {
    const double d = x[i] - p.x_star[i];
    s += d * d;
  }
  return s;
}

inline double evaluate_true(const NoisyQuadraticProblem& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.dim) throw contract_error("evaluate_true: wrong point dimension");
  return quad_form(p.A, x) + dot(p.B, x) + p.C;
}

inline double evaluate_true(const Problem& p, std::span<const double> x) {
  return std::visit([&](const auto& q) { return evaluate_true(q, x); }, p);
}

/// One noisy fitness sample: F(x) + D * z, consuming one evaluation.
template <class P>
inline double evaluate_noisy(const P& p, std::span<const double> x, RandomStream& stream,
                             EvaluationCounter& counter) {
  for (double v : x)
    if (!std::isfinite(v)) throw contract_error("evaluate_noisy: non-finite point");
  counter.consume(1);
  double ns = 1.0;
  if constexpr (std::is_same_v<P, Problem>)
    ns = noise_std(p);
  else
    ns = p.noise_std;
  return evaluate_true(p, x) + ns * stream.next_gaussian();
}

/// The exact minimizer.
inline std::vector<double> optimum(const SphereProblem& p) { return p.x_star; }

inline std::vector<double> optimum(const NoisyQuadraticProblem& p) {
  std::vector<double> rhs(p.B);
  for (double& v : rhs) v *= -0.5;
  auto x = solve_partial_pivot(p.A, std::move(rhs));
  if (!x) throw contract_error("optimum: A is singular, min-eigenvalue invariant violated");
  return *x;
}

inline std::vector<double> optimum(const Problem& p) {
  return std::visit([](const auto& q) { return optimum(q); }, p);
}

/// F(x_hat) - F(x*), clamped to 0 when it dips below by rounding.
template <class P>
inline double simple_regret(const P& p, std::span<const double> x_hat) {
  const auto x_opt = optimum(p);
  const double r = evaluate_true(p, x_hat) - evaluate_true(p, x_opt);
  return r > 0.0 ? r : 0.0;
}

/// One-dimensional restriction of a d-dimensional noisy oracle to axis
/// `axis` (0-based): evaluates at (0,...,0,t,0,...,0), sharing the parent
/// problem's budget counter through the call-site counter argument.
template <class P>
class AxisRestriction {
 public:
  AxisRestriction(const P& problem, int axis) : problem_(&problem), axis_(axis) {
    const int d = problem.dim;
    if (axis < 0 || axis >= d) throw contract_error("restrict_to_axis: axis index out of range");
    point_.assign(d, 0.0);
  }

  double operator()(double t, RandomStream& stream, EvaluationCounter& counter) const {
    point_[axis_] = t;
    const double v = evaluate_noisy(*problem_, point_, stream, counter);
    point_[axis_] = 0.0;
    return v;
  }

  double true_value(double t) const {
    point_[axis_] = t;
    const double v = evaluate_true(*problem_, point_);
    point_[axis_] = 0.0;
    return v;
  }

 private:
  const P* problem_;
  int axis_;
  mutable std::vector<double> point_;
};

template <class P>
inline AxisRestriction<P> restrict_to_axis(const P& problem, int axis) {
  return AxisRestriction<P>(problem, axis);
}

/// Random theorem-compliant quadratic: A = Q diag(lambda) Q^T with Haar Q and
/// eigenvalues uniform in [c, D]; B uniform in the ball of radius D; C uniform
/// in [-D, D]; rejection on ||x*|| > 1 - epsilon (cap 10^4 attempts).
/// `rejections`, when given, reports how many draws the cap consumed.
inline NoisyQuadraticProblem generate_problem(int d, double noise_std, double min_eig, double epsilon,
                                              RandomStream& stream, int* rejections = nullptr) {
  if (d < 1) throw contract_error("generate_problem: dimension must be >= 1");
  if (!(noise_std > 0.0)) throw contract_error("generate_problem: D must be positive");
  if (!(min_eig > 0.0 && min_eig <= noise_std))
    throw contract_error("generate_problem: need 0 < c <= D");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw contract_error("generate_problem: need 0 < epsilon < 1");

  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Matrix q = random_orthogonal(d, stream);
    std::vector<double> lambda(d);
    for (double& v : lambda) v = stream.next_uniform(min_eig, noise_std);

    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += q(i, k) * lambda[k] * q(j, k);
        a(i, j) = s;
      }
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const double v = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = v;
        a(j, i) = v;
      }

    std::vector<double> b(d);
    double nrm = 0.0;
    for (double& v : b) {
      v = stream.next_gaussian();
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    const double radius = noise_std * std::pow(stream.next_uniform(), 1.0 / d);
    for (double& v : b) v *= radius / nrm;

    const double c_term = stream.next_uniform(-noise_std, noise_std);

    auto x_opt = solve_partial_pivot(a, [&] {
      std::vector<double> rhs(b);
      for (double& v : rhs) v *= -0.5;
      return rhs;
    }());
    if (!x_opt || norm2(*x_opt) > 1.0 - epsilon) {
      if (rejections) ++*rejections;
      continue;
    }

    NoisyQuadraticProblem p = make_quadratic_problem(std::move(a), std::move(b), c_term, noise_std, epsilon);
    p.min_eigenvalue = min_eig;  // the generator's lower bound, tighter than the sample minimum
    return p;
  }
  throw generation_error(
      "generate_problem: rejection cap (10^4) exceeded; constraint ||x*|| <= 1 - epsilon "
      "is infeasible for these parameters");
}

// --- flat text serialization (key = value lines) ---------------------------
//
// Schema (one key per line, reals with 17 significant digits, matrices
// row-major comma-separated):
//   kind = quadratic | sphere
//   dim = <int>
//   quadratic: A, B, C, noise_std, min_eigenvalue, epsilon, theorem_compliant
//   sphere:    x_star, noise_std

namespace detail {

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string format_reals(std::span<const double> vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ',';
    out += format_real(vs[i]);
  }
  return out;
}

inline std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace detail

inline void save_problem(const Problem& p, std::ostream& os) {
  if (const auto* q = std::get_if<NoisyQuadraticProblem>(&p)) {
    os << "kind = quadratic\n";
    os << "dim = " << q->dim << "\n";
    os << "A = " << detail::format_reals(q->A.flat()) << "\n";
    os << "B = " << detail::format_reals(q->B) << "\n";
    os << "C = " << detail::format_real(q->C) << "\n";
    os << "noise_std = " << detail::format_real(q->noise_std) << "\n";
    os << "min_eigenvalue = " << detail::format_real(q->min_eigenvalue) << "\n";
    os << "epsilon = " << detail::format_real(q->epsilon) << "\n";
    os << "theorem_compliant = " << (q->theorem_compliant ? 1 : 0) << "\n";
  } else {
    const auto& s = std::get<SphereProblem>(p);
    os << "kind = sphere\n";
    os << "dim = " << s.dim << "\n";
    os << "x_star = " << detail::format_reals(s.x_star) << "\n";
    os << "noise_std = " << detail::format_real(s.noise_std) << "\n";
  }
}

inline Problem load_problem(std::istream& is) {
  std::string line;
  std::string kind;
  int dim = 0;
  std::vector<double> a_flat, b, x_star;
  double c = 0, noise = 1, min_eig = 0, eps = 0;
  int compliant = 0;
  while (std::getline(is, line)) {
    const auto sep = line.find('=');
    if (sep == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b0 = s.find_first_not_of(" \t");
      const auto e0 = s.find_last_not_of(" \t\r");
      return b0 == std::string::npos ? std::string() : s.substr(b0, e0 - b0 + 1);
    };
    const std::string key = trim(line.substr(0, sep));
    const std::string val = trim(line.substr(sep + 1));
    if (key == "kind") kind = val;
    else if (key == "dim") dim = std::stoi(val);
    else if (key == "A") a_flat = detail::parse_reals(val);
    else if (key == "B") b = detail::parse_reals(val);
    else if (key == "C") c = std::stod(val);
    else if (key == "noise_std") noise = std::stod(val);
    else if (key == "min_eigenvalue") min_eig = std::stod(val);
    else if (key == "epsilon") eps = std::stod(val);
    else if (key == "theorem_compliant") compliant = std::stoi(val);
    else if (key == "x_star") x_star = detail::parse_reals(val);
  }
  if (kind == "sphere") return SphereProblem(std::move(x_star), noise);
  if (kind != "quadratic") throw io_error("load_problem: unknown problem kind '" + kind + "'");
  if (static_cast<int>(a_flat.size()) != dim * dim)
    throw io_error("load_problem: A has wrong element count");
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = a_flat[static_cast<std::size_t>(i) * dim + j];
  auto p = make_quadratic_problem(std::move(a), std::move(b), c, noise, eps);
  p.min_eigenvalue = min_eig > 0 ? min_eig : p.min_eigenvalue;
  (void)compliant;  // recomputed, not trusted from the file
  return p;
}

inline void save_problem_file(const Problem& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for writing: " + path);
  save_problem(p, os);
  if (!os) throw io_error("write failed: " + path);
}

inline Problem load_problem_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open for reading: " + path);
  return load_problem(is);
}

}  // namespace cops

#endif  // COPS_PROBLEM_HPP
