#include "qfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "qfuse/rng.hpp"

namespace qfuse {

FusionModel fit(const std::vector<LabeledSample>& samples, const FitOptions& options) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (samples.size() < 2) {
    throw FitError("fit: need at least 2 labeled samples", nan);
  }
  bool has_pos = false, has_neg = false;
  for (const LabeledSample& s : samples) {
    (s.label > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw FitError("fit: both labels must be represented (a single-label set pins the "
                   "dataset state to a pole and degenerates the modality equations)",
                   nan);
  }

  FusionModel model;
  model.options = options;
  model.training_stats = compute_training_stats(samples, options.stats);
  try {
    model.observables = estimate_observables(model.training_stats, options.solver);
  } catch (const EstimationError& e) {
    throw FitError(e.what(), std::numeric_limits<double>::infinity());
  }

  for (int m = 0; m < kNumModalities; ++m) {
    std::size_t correct = 0;
    for (const LabeledSample& s : samples) {
      if (hard_prediction(s.probs[m]) == s.label) ++correct;
    }
    model.modality_accuracy[m] = static_cast<double>(correct) / static_cast<double>(samples.size());
  }
  return model;
}

Prediction predict(const FusionModel& model, const SampleProbs& probs,
                   const SolverConfig& solver) {
  Prediction out;
  out.state = estimate_utterance_state(probs, model.observables, solver);
  const double half = 0.5 * out.state.angles.theta;
  const double c = std::cos(half);
  out.p_pos = c * c;
  out.label = out.p_pos > 0.5 ? +1 : -1;
  out.converged = out.state.solve_report.converged;
  return out;
}

Prediction predict(const FusionModel& model, const SampleProbs& probs) {
  SolverConfig cfg = model.options.solver;
  cfg.convergence_threshold = default_utterance_fit_config().convergence_threshold;
  return predict(model, probs, cfg);
}

std::vector<Prediction> predict_batch(const FusionModel& model,
                                      const std::vector<SampleProbs>& rows,
                                      const SolverConfig& solver, unsigned threads) {
  std::vector<Prediction> out(rows.size());
  if (rows.empty()) return out;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));

  const auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SolverConfig cfg = solver;
      cfg.rng_seed = derive_seed(solver.rng_seed, i);
      out[i] = predict(model, rows[i], cfg);
    }
  };

  if (threads == 1) {
    run_range(0, rows.size());
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (rows.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(rows.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run_range, begin, end);
  }
  for (std::thread& th : pool) th.join();
  return out;
}

int hard_vote(const SampleProbs& probs) {
  const int sum = hard_prediction(probs.p_l) + hard_prediction(probs.p_v) +
                  hard_prediction(probs.p_a);
  return sum > 0 ? +1 : -1;
}

int weighted_vote(const SampleProbs& probs, const std::array<double, kNumModalities>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw std::invalid_argument("weighted_vote: weights must be finite and non-negative");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("weighted_vote: weights must not all be zero");
  }
  double sum = 0.0;
  for (int m = 0; m < kNumModalities; ++m) {
    sum += weights[m] * static_cast<double>(hard_prediction(probs[m]));
  }
  return sum > 0.0 ? +1 : -1;
}

int soft_vote(const SampleProbs& probs) {
  const double mean = (probs.p_l + probs.p_v + probs.p_a) / 3.0;
  return mean > 0.5 ? +1 : -1;
}

Metrics evaluate(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("evaluate: prediction/label length mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("evaluate: no samples");
  }
  Metrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] > 0;
    const bool label_pos = labels[i] > 0;
    if (pred_pos && label_pos) ++m.tp;
    else if (pred_pos && !label_pos) ++m.fp;
    else if (!pred_pos && label_pos) ++m.fn;
    else ++m.tn;
  }
  const double total = static_cast<double>(predictions.size());
  m.acc2 = static_cast<double>(m.tp + m.tn) / total;

  const auto f1 = [](long long tp, long long false_pos, long long false_neg) {
    const long long denom = 2 * tp + false_pos + false_neg;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };
  m.f1_pos = f1(m.tp, m.fp, m.fn);
  const double f1_neg = f1(m.tn, m.fn, m.fp);
  const double support_pos = static_cast<double>(m.tp + m.fn);
  const double support_neg = static_cast<double>(m.tn + m.fp);
  m.f1_weighted = (support_pos * m.f1_pos + support_neg * f1_neg) / total;
  return m;
}

}  // namespace qfuse
