#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfuse/estimation.hpp"

namespace qfuse {

struct FitOptions {
  StatsOptions stats;
  SolverConfig solver = default_observable_fit_config();
};

/// The fitted end-to-end model. Immutable after fit; safe to share across
/// threads for concurrent prediction.
struct FusionModel {
  ObservableSet observables;
  TrainingStats training_stats;
  FitOptions options;  ///< snapshot of the configuration the fit ran with
  /// Per-modality accuracy on the fit rows; the default weighted-vote weights.
  std::array<double, kNumModalities> modality_accuracy{};
};

struct Prediction {
  int label = -1;       ///< +1 when p_pos > 0.5, else -1
  double p_pos = 0.0;   ///< cos^2(theta_t / 2)
  UtteranceState state;
  bool converged = false;
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double best_residual_ssq)
      : std::runtime_error(what), best_residual_ssq_(best_residual_ssq) {}

  double best_residual_ssq() const { return best_residual_ssq_; }

 private:
  double best_residual_ssq_;
};

/// Computes training statistics and fits the observable set. Requires at
/// least two samples with both labels represented; throws FitError otherwise
/// (and on total solver failure). A fit that completed but did not reach the
/// convergence threshold is returned with fit_report.converged = false.
FusionModel fit(const std::vector<LabeledSample>& samples, const FitOptions& options = {});

/// Reconstructs the utterance state from its three probabilities and measures
/// it along the dataset axis: p_pos = cos^2(theta_t / 2).
Prediction predict(const FusionModel& model, const SampleProbs& probs,
                   const SolverConfig& solver);
Prediction predict(const FusionModel& model, const SampleProbs& probs);

/// Per-sample prediction over a batch. Row i solves with
/// rng_seed = derive_seed(solver.rng_seed, i), so the output is independent
/// of thread count and always ordered like the input. threads = 0 picks the
/// hardware concurrency.
std::vector<Prediction> predict_batch(const FusionModel& model,
                                      const std::vector<SampleProbs>& rows,
                                      const SolverConfig& solver, unsigned threads = 0);

/// Majority vote of the three thresholded predictions.
int hard_vote(const SampleProbs& probs);

/// Sign of the weight-averaged thresholded predictions; ties go negative.
/// Weights must be non-negative with a positive sum.
int weighted_vote(const SampleProbs& probs, const std::array<double, kNumModalities>& weights);

/// +1 when the mean probability exceeds 0.5, else -1.
int soft_vote(const SampleProbs& probs);

struct Metrics {
  double acc2 = 0.0;
  double f1_pos = 0.0;
  double f1_weighted = 0.0;
  // Confusion counts with +1 as the positive class.
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Binary accuracy, positive-class F1, support-weighted F1, and the confusion
/// counts. Throws std::invalid_argument on empty or mismatched inputs.
Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace qfuse
