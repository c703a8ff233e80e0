#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qfuse/qmath.hpp"
#include "qfuse/solver.hpp"

namespace qfuse {

inline constexpr int kNumModalities = 3;
inline constexpr const char* kModalityNames[kNumModalities] = {"linguistic", "visual", "acoustic"};
/// Modality index pairs in reporting order: (L,V), (L,A), (V,A).
inline constexpr int kModalityPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

/// Positive-class probabilities, one per modality, for a single utterance.
struct SampleProbs {
  double p_l = 0.5;
  double p_v = 0.5;
  double p_a = 0.5;

  double operator[](int m) const {
    switch (m) {
      case 0: return p_l;
      case 1: return p_v;
      case 2: return p_a;
      default: throw std::out_of_range("SampleProbs: modality index must be 0, 1, or 2");
    }
  }
};

/// +1 when p > 0.5, else -1 (exact 0.5 counts as negative).
inline int hard_prediction(double p) { return p > 0.5 ? +1 : -1; }

/// Clamps each probability into [1e-6, 1 - 1e-6] so the residual systems
/// never demand a noiseless root on the boundary of the eta transform.
SampleProbs clamp_probs(const SampleProbs& probs);

struct LabeledSample {
  int label = -1;  ///< +1 or -1
  SampleProbs probs;
};

/// Aggregate training statistics the observable fit has to match.
struct TrainingStats {
  double pos_rate = 0.0;
  std::array<double, kNumModalities> modality_pos_rate{};
  std::array<double, 3> pairwise_corr{};  // (L,V), (L,A), (V,A)
  std::size_t n_samples = 0;
  /// A Pearson input had zero variance; the affected correlations were set
  /// to 0 instead of failing the fit.
  bool degenerate_corr = false;
};

/// Reading of the per-modality positive count.
enum class MposInterpretation {
  kPredictedRate,     ///< fraction of samples the modality predicts positive
  kTruePositiveRate,  ///< fraction predicted positive with a positive true label
};

/// Input series for the pairwise Pearson correlations.
enum class CorrInput {
  kHardPredictions,  ///< +1/-1 thresholded predictions
  kProbabilities,    ///< raw probabilities
};

struct StatsOptions {
  MposInterpretation mpos = MposInterpretation::kPredictedRate;
  CorrInput corr_on = CorrInput::kHardPredictions;
};

/// Throws std::invalid_argument on an empty sample list.
TrainingStats compute_training_stats(const std::vector<LabeledSample>& samples,
                                     const StatsOptions& options = {});

/// The fitted measurement set: a dataset-level state direction g (phi fixed
/// to 0) and one observable per modality.
struct ObservableSet {
  BlochState g;
  Observable obs_l, obs_v, obs_a;
  SolveReport fit_report;

  const Observable& modality(int m) const {
    switch (m) {
      case 0: return obs_l;
      case 1: return obs_v;
      case 2: return obs_a;
      default: throw std::out_of_range("ObservableSet: modality index must be 0, 1, or 2");
    }
  }
};

/// Per-utterance reconstruction: state angles plus the measurement noise
/// level the three probabilities imply.
struct UtteranceState {
  BlochState angles;
  double eta = 1.0;
  SolveReport solve_report;
};

/// Residuals of the 7-equation observable system at
/// params = (theta_g, theta_l, theta_v, theta_a, phi_l, phi_v, phi_a):
/// the dataset positive-rate equation, one overlap-probability equation per
/// modality (phi_g = 0), and one correlation equation per modality pair.
void observable_residuals(std::span<const double> params, const TrainingStats& stats,
                          std::span<double> out);

/// Bounded system wrapping observable_residuals; all 7 angles periodic on [0, 2*pi].
ResidualSystem make_observable_system(const TrainingStats& stats);

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multi-start fit of the 7 observable parameters. Throws EstimationError
/// only when every restart failed; a merely non-converged fit is reported
/// through fit_report.converged.
ObservableSet estimate_observables(const TrainingStats& stats, const SolverConfig& config);

/// Residuals of the per-utterance system at params = (theta_t, phi_t, eta):
/// for each modality, eta/2 + (1 - eta) * overlap - p_m. This equals the
/// unsharp-measurement probability of that modality on the state, minus the
/// observed probability.
void utterance_residuals(std::span<const double> params, const SampleProbs& probs,
                         const ObservableSet& observables, std::span<double> out);

/// Bounded system wrapping utterance_residuals: angles periodic on [0, 2*pi],
/// eta on [0, 1] via a logistic transform. Probabilities are used as given;
/// clamp first when they may sit on the boundary.
ResidualSystem make_utterance_system(const SampleProbs& probs, const ObservableSet& observables);

/// Multi-start reconstruction of (theta_t, phi_t, eta) from one utterance's
/// probabilities (clamped internally). Never throws on non-convergence: the
/// best-found parameters come back with solve_report.converged = false.
UtteranceState estimate_utterance_state(const SampleProbs& probs,
                                        const ObservableSet& observables,
                                        const SolverConfig& config);

/// Solver defaults for the two fits; they differ only in how small the
/// residual SSQ must be to count as converged.
inline SolverConfig default_observable_fit_config() {
  SolverConfig c;
  c.convergence_threshold = 1e-10;
  return c;
}

inline SolverConfig default_utterance_fit_config() {
  SolverConfig c;
  c.convergence_threshold = 1e-12;
  return c;
}

}  // namespace qfuse
