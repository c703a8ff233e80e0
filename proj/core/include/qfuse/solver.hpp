#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qfuse {

/// How a box-bounded parameter is exposed to the unconstrained core.
enum class BoundKind {
  /// x = lo + (hi - lo) * sigmoid(u). Works for any finite box.
  kLogistic,
  /// Solved as-is, wrapped into [lo, hi) on output. The residuals must be
  /// (hi - lo)-periodic in this parameter.
  kPeriodic,
};

struct ParamBound {
  double lo = 0.0;
  double hi = 1.0;
  BoundKind kind = BoundKind::kLogistic;
};

/// Bounded nonlinear least-squares problem: minimize |evaluate(x)|^2 over the
/// box described by `bounds`.
struct ResidualSystem {
  std::size_t dimension = 0;
  std::size_t residual_count = 0;
  std::vector<ParamBound> bounds;  // one per parameter
  /// Writes residual_count values; must accept any in-bounds vector.
  std::function<void(std::span<const double>, std::span<double>)> evaluate;
};

struct SolverConfig {
  int n_restarts = 200;
  int max_iterations = 200;  ///< accepted descent steps per local solve
  double convergence_threshold = 1e-12;  ///< residual SSQ at which a solve counts as converged
  double step_tolerance = 1e-10;  ///< step norm below which a local solve stops
  std::uint64_t rng_seed = 42;
};

struct SolveReport {
  double best_residual_ssq = std::numeric_limits<double>::infinity();
  int restarts_run = 0;
  int restarts_failed = 0;  ///< discarded for non-finite residuals at the start
  long long iterations_total = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

struct LocalResult {
  std::vector<double> params;  ///< bounded coordinates
  double residual_ssq = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool start_finite = true;  ///< false: start produced non-finite residuals, result discarded
};

/// Damped least-squares descent (Levenberg-Marquardt with a forward
/// finite-difference Jacobian) from one start point. `start` must lie within
/// the declared bounds; the returned SSQ never exceeds the SSQ at the start.
/// When `accepted_ssq_trace` is given it receives the SSQ after every
/// accepted step.
LocalResult solve_local(const ResidualSystem& system, std::span<const double> start,
                        const SolverConfig& config,
                        std::vector<double>* accepted_ssq_trace = nullptr);

struct MultistartResult {
  std::vector<double> params;
  SolveReport report;
};

/// Runs config.n_restarts local solves from uniform in-bounds starts and
/// keeps the smallest residual SSQ, ties broken by lowest restart index.
/// Restart k draws its start from SplitMix64 seeded with
/// derive_seed(config.rng_seed, k), so results reproduce across runs and
/// platforms. Returns nullopt when every restart was discarded for
/// non-finite residuals.
std::optional<MultistartResult> solve_multistart(const ResidualSystem& system,
                                                 const SolverConfig& config);

struct GridResult {
  std::vector<double> params;
  double residual_ssq = std::numeric_limits<double>::infinity();
};

/// Exhaustive scan of the regular grid with `resolution` points per
/// dimension, bounds included: a brute-force verification oracle for small
/// systems. Throws std::invalid_argument when dimension > 4 or resolution < 2.
GridResult grid_oracle(const ResidualSystem& system, int resolution);

}  // namespace qfuse
