#include "qfuse/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace qfuse {
namespace {

constexpr double kProbClampLo = 1e-6;
constexpr double kProbClampHi = 1.0 - 1e-6;

double pearson(const std::vector<double>& x, const std::vector<double>& y, bool& degenerate) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    degenerate = true;  // constant series: correlation undefined, use 0
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

SampleProbs clamp_probs(const SampleProbs& probs) {
  const auto clamp = [](double p) { return std::clamp(p, kProbClampLo, kProbClampHi); };
  return {clamp(probs.p_l), clamp(probs.p_v), clamp(probs.p_a)};
}

TrainingStats compute_training_stats(const std::vector<LabeledSample>& samples,
                                     const StatsOptions& options) {
  if (samples.empty()) {
    throw std::invalid_argument("compute_training_stats: sample list is empty");
  }
  const double n = static_cast<double>(samples.size());

  TrainingStats stats;
  stats.n_samples = samples.size();

  std::size_t n_pos = 0;
  for (const LabeledSample& s : samples) {
    if (s.label > 0) ++n_pos;
  }
  stats.pos_rate = static_cast<double>(n_pos) / n;

  for (int m = 0; m < kNumModalities; ++m) {
    std::size_t count = 0;
    for (const LabeledSample& s : samples) {
      const bool predicted_pos = hard_prediction(s.probs[m]) > 0;
      switch (options.mpos) {
        case MposInterpretation::kPredictedRate:
          if (predicted_pos) ++count;
          break;
        case MposInterpretation::kTruePositiveRate:
          if (predicted_pos && s.label > 0) ++count;
          break;
      }
    }
    stats.modality_pos_rate[m] = static_cast<double>(count) / n;
  }

  std::array<std::vector<double>, kNumModalities> series;
  for (int m = 0; m < kNumModalities; ++m) {
    series[m].reserve(samples.size());
    for (const LabeledSample& s : samples) {
      series[m].push_back(options.corr_on == CorrInput::kHardPredictions
                              ? static_cast<double>(hard_prediction(s.probs[m]))
                              : s.probs[m]);
    }
  }
  for (int k = 0; k < 3; ++k) {
    stats.pairwise_corr[k] =
        pearson(series[kModalityPairs[k][0]], series[kModalityPairs[k][1]], stats.degenerate_corr);
  }
  return stats;
}

void observable_residuals(std::span<const double> params, const TrainingStats& stats,
                          std::span<double> out) {
  const double theta_g = params[0];
  const double cg = std::cos(0.5 * theta_g);
  out[0] = cg * cg - stats.pos_rate;

  for (int m = 0; m < kNumModalities; ++m) {
    out[1 + m] =
        overlap_probability(params[1 + m], params[4 + m], theta_g, 0.0) -
        stats.modality_pos_rate[m];
  }
  for (int k = 0; k < 3; ++k) {
    const int a = kModalityPairs[k][0];
    const int b = kModalityPairs[k][1];
    out[4 + k] = correlation_closed_form(params[1 + a], params[4 + a], params[1 + b],
                                         params[4 + b]) -
                 stats.pairwise_corr[k];
  }
}

ResidualSystem make_observable_system(const TrainingStats& stats) {
  ResidualSystem sys;
  sys.dimension = 7;
  sys.residual_count = 7;
  sys.bounds.assign(7, ParamBound{0.0, kTwoPi, BoundKind::kPeriodic});
  sys.evaluate = [stats](std::span<const double> p, std::span<double> r) {
    observable_residuals(p, stats, r);
  };
  return sys;
}

ObservableSet estimate_observables(const TrainingStats& stats, const SolverConfig& config) {
  const ResidualSystem sys = make_observable_system(stats);
  const auto solution = solve_multistart(sys, config);
  if (!solution) {
    throw EstimationError("observable fit: every restart produced non-finite residuals");
  }
  const std::vector<double>& p = solution->params;
  ObservableSet set;
  set.g = BlochState(p[0], 0.0);
  set.obs_l = Observable{BlochState(p[1], p[4])};
  set.obs_v = Observable{BlochState(p[2], p[5])};
  set.obs_a = Observable{BlochState(p[3], p[6])};
  set.fit_report = solution->report;
  return set;
}

void utterance_residuals(std::span<const double> params, const SampleProbs& probs,
                         const ObservableSet& observables, std::span<double> out) {
  const double theta_t = params[0];
  const double phi_t = params[1];
  const double eta = params[2];
  for (int m = 0; m < kNumModalities; ++m) {
    const BlochState& axis = observables.modality(m).angles;
    out[m] = 0.5 * eta +
             (1.0 - eta) * overlap_probability(axis.theta, axis.phi, theta_t, phi_t) - probs[m];
  }
}

ResidualSystem make_utterance_system(const SampleProbs& probs, const ObservableSet& observables) {
  ResidualSystem sys;
  sys.dimension = 3;
  sys.residual_count = 3;
  sys.bounds = {ParamBound{0.0, kTwoPi, BoundKind::kPeriodic},
                ParamBound{0.0, kTwoPi, BoundKind::kPeriodic},
                ParamBound{0.0, 1.0, BoundKind::kLogistic}};
  sys.evaluate = [probs, observables](std::span<const double> p, std::span<double> r) {
    utterance_residuals(p, probs, observables, r);
  };
  return sys;
}

UtteranceState estimate_utterance_state(const SampleProbs& probs,
                                        const ObservableSet& observables,
                                        const SolverConfig& config) {
  const SampleProbs clamped = clamp_probs(probs);
  const ResidualSystem sys = make_utterance_system(clamped, observables);
  const auto solution = solve_multistart(sys, config);

  UtteranceState state;
  if (!solution) {
    // Unreachable for finite probabilities; report a neutral non-converged state.
    state.angles = BlochState(0.5 * std::numbers::pi, 0.0);
    state.eta = 1.0;
    state.solve_report.seed = config.rng_seed;
    state.solve_report.restarts_run = config.n_restarts;
    state.solve_report.restarts_failed = config.n_restarts;
    return state;
  }
  state.angles = BlochState(solution->params[0], solution->params[1]);
  state.eta = std::clamp(solution->params[2], 0.0, 1.0);
  state.solve_report = solution->report;
  return state;
}

}  // namespace qfuse
