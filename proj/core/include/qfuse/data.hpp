#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfuse/fusion.hpp"

namespace qfuse {

enum class Split { kTrain, kValid, kTest };

const char* split_name(Split split);
Split split_from_string(const std::string& text);  // throws std::invalid_argument

struct Record {
  std::string id;
  Split split = Split::kTrain;
  int label = -1;  ///< +1 or -1
  SampleProbs probs;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  /// The label column carries a raw score instead of +-1; binarized on load
  /// as score >= 0 -> +1.
  bool raw_scores = false;
};

struct LoadResult {
  std::vector<Record> records;
  int clamped_rows = 0;  ///< rows whose probabilities needed clamping into [1e-6, 1 - 1e-6]
};

/// Reads a dataset CSV with header `id,split,label,p_l,p_v,p_a`. Every
/// malformed row raises ParseError naming the row number and column.
LoadResult load_csv(const std::string& path, const LoadOptions& options = {});

/// Writes the same schema load_csv reads.
void save_csv(const std::vector<Record>& records, const std::string& path);

struct SynthConfig {
  int n_train = 1284;
  int n_valid = 686;
  int n_test = 229;
  double pos_fraction = 0.5;                          // in (0, 1)
  std::array<double, kNumModalities> accuracy = {0.77, 0.55, 0.56};  // each in (0.5, 1]
  double agreement = 0.3;      // in [0, 1]: share of a common latent draw across modalities
  double concentration = 2.0;  // > 0: how far confidences sit from 0.5
  std::uint64_t seed = 42;
};

/// Draws a labeled dataset of correlated synthetic classifiers. Each modality
/// keeps its configured marginal accuracy; raising `agreement` mixes in a
/// shared latent draw, which raises the pairwise correlation of the hard
/// predictions. Deterministic for a fixed seed. Throws std::invalid_argument
/// on out-of-range configuration.
std::vector<Record> generate_synthetic(const SynthConfig& config);

/// Versioned JSON model file; a round trip restores every field exactly.
void save_model(const FusionModel& model, const std::string& path);
FusionModel load_model(const std::string& path);  // throws ModelIoError

struct PredictionRow {
  std::string id;
  int label = -1;
  int pred = -1;
  double p_pos = 0.0;
  double eta = 1.0;
  double theta = 0.0;
  double phi = 0.0;
  double residual_ssq = 0.0;
  bool converged = false;
};

/// Writes `id,label,pred,p_pos,eta,theta,phi,residual_ssq,converged` rows,
/// one per prediction, aligned with `records`.
void save_predictions(const std::vector<Prediction>& predictions,
                      const std::vector<Record>& records, const std::string& path);

std::vector<PredictionRow> load_predictions_csv(const std::string& path);

std::vector<Record> rows_in_split(const std::vector<Record>& records, Split split);
std::vector<LabeledSample> to_samples(const std::vector<Record>& records);

}  // namespace qfuse
