#include "qfuse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qfuse/rng.hpp"

namespace qfuse {
namespace {

constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaGrow = 10.0;
constexpr double kLambdaShrink = 0.1;
constexpr double kLambdaMax = 1e14;
constexpr double kLambdaMin = 1e-15;
constexpr double kFdRelStep = 1e-7;
constexpr int kMaxRejectionsPerStep = 25;

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double wrap_into(double value, double lo, double hi) {
  const double span = hi - lo;
  double r = std::fmod(value - lo, span);
  if (r < 0.0) r += span;
  if (r >= span) r = 0.0;
  return lo + r;
}

double to_internal(double x, const ParamBound& b) {
  if (b.kind == BoundKind::kPeriodic) return x;
  const double t = std::clamp((x - b.lo) / (b.hi - b.lo), 1e-12, 1.0 - 1e-12);
  return std::log(t / (1.0 - t));
}

double to_external_eval(double u, const ParamBound& b) {
  if (b.kind == BoundKind::kPeriodic) return u;  // residuals are periodic, no wrap needed
  return b.lo + (b.hi - b.lo) * sigmoid(u);
}

double to_external_report(double u, const ParamBound& b) {
  if (b.kind == BoundKind::kPeriodic) return wrap_into(u, b.lo, b.hi);
  return b.lo + (b.hi - b.lo) * sigmoid(u);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double sum_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

void validate_system(const ResidualSystem& sys) {
  if (sys.dimension == 0 || sys.residual_count == 0) {
    throw std::invalid_argument("ResidualSystem: dimension and residual_count must be positive");
  }
  if (sys.bounds.size() != sys.dimension) {
    throw std::invalid_argument("ResidualSystem: bounds size must match dimension");
  }
  if (!sys.evaluate) {
    throw std::invalid_argument("ResidualSystem: evaluate is empty");
  }
  for (const ParamBound& b : sys.bounds) {
    if (!(b.lo < b.hi)) throw std::invalid_argument("ResidualSystem: bound lo must be < hi");
  }
}

// Evaluates residuals at internal (unconstrained) coordinates.
class Evaluator {
 public:
  explicit Evaluator(const ResidualSystem& sys) : sys_(sys), x_(sys.dimension) {}

  bool eval(std::span<const double> u, std::span<double> r) {
    for (std::size_t i = 0; i < sys_.dimension; ++i) {
      x_[i] = to_external_eval(u[i], sys_.bounds[i]);
    }
    sys_.evaluate(x_, r);
    return all_finite(r);
  }

 private:
  const ResidualSystem& sys_;
  std::vector<double> x_;
};

// Gaussian elimination with partial pivoting; a is n x n row-major and both
// a and rhs get clobbered. Returns false on a (numerically) singular matrix.
bool solve_linear(std::vector<double>& a, std::vector<double>& rhs, std::span<double> out) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row * n + col]) > std::abs(a[piv * n + col])) piv = row;
    }
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    const double d = a[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[row * n + c] -= f * a[col * n + c];
      rhs[row] -= f * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * out[c];
    out[i] = acc / a[i * n + i];
  }
  return true;
}

struct LmOutcome {
  std::vector<double> u;
  double ssq = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool start_finite = true;
};

LmOutcome run_lm(Evaluator& ev, std::vector<double> u, std::size_t m, const SolverConfig& cfg,
                 std::vector<double>* trace) {
  const std::size_t n = u.size();
  std::vector<double> r(m), r_try(m), u_try(n), jac(m * n);
  std::vector<double> normal(n * n), normal_damped(n * n), grad(n), grad_copy(n), delta(n);

  LmOutcome out;
  if (!ev.eval(u, r)) {
    out.u = std::move(u);
    out.start_finite = false;
    return out;
  }
  double ssq = sum_squares(r);
  double lambda = kLambdaInit;

  while (out.iterations < cfg.max_iterations && ssq > cfg.convergence_threshold) {
    // Forward-difference Jacobian at u.
    bool jac_ok = true;
    for (std::size_t j = 0; j < n && jac_ok; ++j) {
      const double h = kFdRelStep * std::max(1.0, std::abs(u[j]));
      u_try = u;
      u_try[j] += h;
      if (!ev.eval(u_try, r_try)) {
        jac_ok = false;
        break;
      }
      for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (r_try[i] - r[i]) / h;
    }
    if (!jac_ok) break;

    for (std::size_t a = 0; a < n; ++a) {
      grad[a] = 0.0;
      for (std::size_t i = 0; i < m; ++i) grad[a] += jac[i * n + a] * r[i];
      for (std::size_t b = a; b < n; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += jac[i * n + a] * jac[i * n + b];
        normal[a * n + b] = acc;
        normal[b * n + a] = acc;
      }
    }

    bool accepted = false;
    for (int rejection = 0; rejection < kMaxRejectionsPerStep; ++rejection) {
      normal_damped = normal;
      for (std::size_t d = 0; d < n; ++d) normal_damped[d * n + d] += lambda;
      grad_copy = grad;
      if (!solve_linear(normal_damped, grad_copy, delta)) {
        lambda *= kLambdaGrow;
        if (lambda > kLambdaMax) break;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) u_try[j] = u[j] - delta[j];
      double ssq_try = std::numeric_limits<double>::infinity();
      if (ev.eval(u_try, r_try)) ssq_try = sum_squares(r_try);
      if (ssq_try <= ssq) {
        double step_sq = 0.0;
        for (double d : delta) step_sq += d * d;
        u.swap(u_try);
        r.swap(r_try);
        ssq = ssq_try;
        lambda = std::max(lambda * kLambdaShrink, kLambdaMin);
        accepted = true;
        ++out.iterations;
        if (trace) trace->push_back(ssq);
        if (std::sqrt(step_sq) <= cfg.step_tolerance) {
          out.u = std::move(u);
          out.ssq = ssq;
          return out;
        }
        break;
      }
      lambda *= kLambdaGrow;
      if (lambda > kLambdaMax) break;
    }
    if (!accepted) break;  // damping exhausted, landscape is flat or hostile here
  }

  out.u = std::move(u);
  out.ssq = ssq;
  return out;
}

}  // namespace

LocalResult solve_local(const ResidualSystem& system, std::span<const double> start,
                        const SolverConfig& config, std::vector<double>* accepted_ssq_trace) {
  validate_system(system);
  if (start.size() != system.dimension) {
    throw std::invalid_argument("solve_local: start size must match system dimension");
  }

  Evaluator ev(system);
  std::vector<double> u(system.dimension);
  for (std::size_t i = 0; i < system.dimension; ++i) u[i] = to_internal(start[i], system.bounds[i]);

  // Already at (or below) the convergence floor: hand the start back verbatim.
  {
    std::vector<double> r(system.residual_count);
    if (ev.eval(u, r)) {
      const double ssq0 = sum_squares(r);
      if (ssq0 <= config.convergence_threshold) {
        return {std::vector<double>(start.begin(), start.end()), ssq0, 0, true};
      }
    } else {
      return {std::vector<double>(start.begin(), start.end()),
              std::numeric_limits<double>::infinity(), 0, false};
    }
  }

  LmOutcome lm = run_lm(ev, std::move(u), system.residual_count, config, accepted_ssq_trace);

  LocalResult out;
  out.start_finite = lm.start_finite;
  out.iterations = lm.iterations;
  out.residual_ssq = lm.ssq;
  out.params.resize(system.dimension);
  for (std::size_t i = 0; i < system.dimension; ++i) {
    out.params[i] = to_external_report(lm.u[i], system.bounds[i]);
  }
  return out;
}

std::optional<MultistartResult> solve_multistart(const ResidualSystem& system,
                                                 const SolverConfig& config) {
  validate_system(system);
  if (config.n_restarts < 1) {
    throw std::invalid_argument("solve_multistart: n_restarts must be >= 1");
  }

  SolveReport report;
  report.seed = config.rng_seed;

  std::vector<double> start(system.dimension);
  std::vector<double> best_params;
  double best_ssq = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int k = 0; k < config.n_restarts; ++k) {
    SplitMix64 rng(derive_seed(config.rng_seed, static_cast<std::uint64_t>(k)));
    for (std::size_t i = 0; i < system.dimension; ++i) {
      start[i] = rng.uniform(system.bounds[i].lo, system.bounds[i].hi);
    }
    LocalResult local = solve_local(system, start, config);
    ++report.restarts_run;
    report.iterations_total += local.iterations;
    if (!local.start_finite) {
      ++report.restarts_failed;
      continue;
    }
    if (!have_best || local.residual_ssq < best_ssq) {  // strict: ties keep the earliest restart
      best_ssq = local.residual_ssq;
      best_params = std::move(local.params);
      have_best = true;
    }
  }

  if (!have_best) return std::nullopt;

  report.best_residual_ssq = best_ssq;
  report.converged = best_ssq <= config.convergence_threshold;
  return MultistartResult{std::move(best_params), report};
}

GridResult grid_oracle(const ResidualSystem& system, int resolution) {
  validate_system(system);
  if (system.dimension > 4) {
    throw std::invalid_argument("grid_oracle: supports at most 4 parameters");
  }
  if (resolution < 2) {
    throw std::invalid_argument("grid_oracle: resolution must be at least 2");
  }

  const std::size_t dim = system.dimension;
  unsigned long long total = 1;
  for (std::size_t i = 0; i < dim; ++i) total *= static_cast<unsigned long long>(resolution);

  std::vector<double> x(dim), r(system.residual_count);
  GridResult best;
  for (unsigned long long flat = 0; flat < total; ++flat) {
    unsigned long long rem = flat;
    for (std::size_t i = 0; i < dim; ++i) {
      const auto idx = static_cast<double>(rem % static_cast<unsigned long long>(resolution));
      rem /= static_cast<unsigned long long>(resolution);
      const ParamBound& b = system.bounds[i];
      x[i] = b.lo + (b.hi - b.lo) * idx / static_cast<double>(resolution - 1);
    }
    system.evaluate(x, r);
    if (!all_finite(r)) continue;
    const double ssq = sum_squares(r);
    if (ssq < best.residual_ssq) {  // strict: ties keep the first grid point
      best.residual_ssq = ssq;
      best.params = x;
    }
  }
  if (best.params.empty()) {
    throw std::runtime_error("grid_oracle: no grid point produced finite residuals");
  }
  return best;
}

}  // namespace qfuse
