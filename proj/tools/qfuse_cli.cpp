// qfuse command line: synthesize datasets, fit the fusion model, predict,
// evaluate against voting baselines, and cross-check the per-utterance solver
// against the brute-force grid oracle.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfuse/data.hpp"
#include "qfuse/rng.hpp"

namespace {

using namespace qfuse;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

StatsOptions stats_options_from_flags(const std::string& mpos, const std::string& corr_on) {
  StatsOptions opt;
  opt.mpos = mpos == "true-pos" ? MposInterpretation::kTruePositiveRate
                                : MposInterpretation::kPredictedRate;
  opt.corr_on = corr_on == "prob" ? CorrInput::kProbabilities : CorrInput::kHardPredictions;
  return opt;
}

std::vector<Record> fit_rows(const std::vector<Record>& records, bool include_valid) {
  std::vector<Record> rows = rows_in_split(records, Split::kTrain);
  if (rows.empty()) {
    throw ParseError("no train rows in the dataset");
  }
  if (include_valid) {
    for (const Record& r : records) {
      if (r.split == Split::kValid) rows.push_back(r);
    }
  }
  return rows;
}

void print_stats(const TrainingStats& stats) {
  std::cout << "training stats: n=" << stats.n_samples << " pos_rate=" << fmt(stats.pos_rate);
  for (int m = 0; m < kNumModalities; ++m) {
    std::cout << " rate_" << kModalityNames[m][0] << "=" << fmt(stats.modality_pos_rate[m]);
  }
  std::cout << " corr_lv=" << fmt(stats.pairwise_corr[0])
            << " corr_la=" << fmt(stats.pairwise_corr[1])
            << " corr_va=" << fmt(stats.pairwise_corr[2]);
  if (stats.degenerate_corr) std::cout << " (degenerate correlation input, forced to 0)";
  std::cout << "\n";
}

struct FitArgs {
  std::string data_path;
  std::string model_out;
  std::string fit_on = "train+valid";
  std::string mpos = "pred-rate";
  std::string corr_on = "hard";
  int restarts = 200;
  std::uint64_t seed = 42;
  bool raw_scores = false;
  bool json = false;
};

int run_fit(const FitArgs& args) {
  const LoadResult loaded = load_csv(args.data_path, {args.raw_scores});
  const std::vector<Record> rows = fit_rows(loaded.records, args.fit_on == "train+valid");

  FitOptions options;
  options.stats = stats_options_from_flags(args.mpos, args.corr_on);
  options.solver.n_restarts = args.restarts;
  options.solver.rng_seed = args.seed;

  const FusionModel model = fit(to_samples(rows), options);
  save_model(model, args.model_out);

  const SolveReport& report = model.observables.fit_report;
  if (args.json) {
    nlohmann::json j;
    j["fit_rows"] = rows.size();
    j["clamped_rows"] = loaded.clamped_rows;
    j["residual_ssq"] = report.best_residual_ssq;
    j["converged"] = report.converged;
    j["restarts"] = report.restarts_run;
    j["model"] = args.model_out;
    std::cout << j.dump(2) << "\n";
  } else {
    print_stats(model.training_stats);
    std::cout << "fit on " << rows.size() << " rows (" << args.fit_on << ")";
    if (loaded.clamped_rows > 0) std::cout << ", " << loaded.clamped_rows << " rows clamped";
    std::cout << "\n";
    std::cout << "residual ssq " << fmt(report.best_residual_ssq, "%.3e") << " after "
              << report.restarts_run << " restarts, converged "
              << (report.converged ? "yes" : "no") << "\n";
    std::cout << "model written to " << args.model_out << "\n";
  }
  if (!report.converged) {
    std::cerr << "warning: fit did not reach the convergence threshold; model written anyway\n";
    return kExitWarnings;
  }
  return kExitOk;
}

struct PredictArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  int restarts = 200;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string fallback = "none";
  bool raw_scores = false;
};

int run_predict(const PredictArgs& args) {
  const FusionModel model = load_model(args.model_path);
  const LoadResult loaded = load_csv(args.data_path, {args.raw_scores});
  const std::vector<Record> rows = rows_in_split(loaded.records, Split::kTest);
  if (rows.empty()) throw ParseError(args.data_path + ": no test rows");

  SolverConfig solver = default_utterance_fit_config();
  solver.n_restarts = args.restarts;
  solver.rng_seed = args.seed;

  std::vector<SampleProbs> probs;
  probs.reserve(rows.size());
  for (const Record& r : rows) probs.push_back(r.probs);

  std::vector<Prediction> predictions = predict_batch(model, probs, solver, args.threads);

  std::size_t non_converged = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].converged) continue;
    ++non_converged;
    if (args.fallback == "soft-vote") {
      Prediction& p = predictions[i];
      p.label = soft_vote(rows[i].probs);
      p.p_pos = (rows[i].probs.p_l + rows[i].probs.p_v + rows[i].probs.p_a) / 3.0;
    }
  }

  save_predictions(predictions, rows, args.out_path);
  std::cout << "predicted " << predictions.size() << " rows, " << non_converged
            << " non-converged";
  if (non_converged > 0 && args.fallback == "soft-vote") std::cout << " (soft-vote fallback)";
  std::cout << "; written to " << args.out_path << "\n";
  return non_converged > 0 ? kExitWarnings : kExitOk;
}

struct EvalArgs {
  std::string data_path;
  std::string model_path;
  std::string pred_path;
  std::string weights_csv;
  int restarts = 200;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  bool raw_scores = false;
  bool json = false;
};

std::array<double, kNumModalities> eval_weights(const EvalArgs& args,
                                                const std::optional<FusionModel>& model,
                                                const std::vector<Record>& all_records,
                                                std::string& source) {
  if (!args.weights_csv.empty()) {
    std::array<double, kNumModalities> w{};
    if (std::sscanf(args.weights_csv.c_str(), "%lf,%lf,%lf", &w[0], &w[1], &w[2]) != 3) {
      throw std::invalid_argument("--weights expects three comma-separated numbers");
    }
    source = "flag";
    return w;
  }
  if (model) {
    source = "model training accuracy";
    return model->modality_accuracy;
  }
  const std::vector<Record> train = rows_in_split(all_records, Split::kTrain);
  if (!train.empty()) {
    std::array<double, kNumModalities> w{};
    for (int m = 0; m < kNumModalities; ++m) {
      std::size_t correct = 0;
      for (const Record& r : train) {
        if (hard_prediction(r.probs[m]) == r.label) ++correct;
      }
      w[m] = static_cast<double>(correct) / static_cast<double>(train.size());
    }
    source = "train-split accuracy";
    return w;
  }
  source = "equal";
  return {1.0, 1.0, 1.0};
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"acc2", m.acc2},
          {"f1_pos", m.f1_pos},
          {"f1_weighted", m.f1_weighted},
          {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}}}};
}

void print_metrics_line(const std::string& name, const Metrics& m) {
  std::cout << name << ": acc2=" << fmt(m.acc2, "%.4f") << " f1_pos=" << fmt(m.f1_pos, "%.4f")
            << " f1_weighted=" << fmt(m.f1_weighted, "%.4f") << " confusion tp=" << m.tp
            << " fp=" << m.fp << " fn=" << m.fn << " tn=" << m.tn << "\n";
}

int run_eval(const EvalArgs& args) {
  if (args.model_path.empty() == args.pred_path.empty()) {
    throw std::invalid_argument("eval needs exactly one of --model or --pred");
  }
  const LoadResult loaded = load_csv(args.data_path, {args.raw_scores});
  const std::vector<Record> rows = rows_in_split(loaded.records, Split::kTest);
  if (rows.empty()) throw ParseError(args.data_path + ": no test rows");

  std::optional<FusionModel> model;
  std::vector<int> fused;
  std::size_t non_converged = 0;

  if (!args.model_path.empty()) {
    model = load_model(args.model_path);
    SolverConfig solver = default_utterance_fit_config();
    solver.n_restarts = args.restarts;
    solver.rng_seed = args.seed;
    std::vector<SampleProbs> probs;
    probs.reserve(rows.size());
    for (const Record& r : rows) probs.push_back(r.probs);
    for (const Prediction& p : predict_batch(*model, probs, solver, args.threads)) {
      fused.push_back(p.label);
      if (!p.converged) ++non_converged;
    }
  } else {
    std::map<std::string, int> by_id;
    for (const PredictionRow& p : load_predictions_csv(args.pred_path)) {
      by_id[p.id] = p.pred;
    }
    for (const Record& r : rows) {
      const auto it = by_id.find(r.id);
      if (it == by_id.end()) {
        throw ParseError(args.pred_path + ": no prediction for test row id '" + r.id + "'");
      }
      fused.push_back(it->second);
    }
  }

  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const Record& r : rows) labels.push_back(r.label);

  std::string weight_source;
  const std::array<double, kNumModalities> weights =
      eval_weights(args, model, loaded.records, weight_source);

  std::vector<int> hard, weighted, soft;
  for (const Record& r : rows) {
    hard.push_back(hard_vote(r.probs));
    weighted.push_back(weighted_vote(r.probs, weights));
    soft.push_back(soft_vote(r.probs));
  }

  const Metrics model_metrics = evaluate(fused, labels);
  const Metrics hard_metrics = evaluate(hard, labels);
  const Metrics weighted_metrics = evaluate(weighted, labels);
  const Metrics soft_metrics = evaluate(soft, labels);

  if (args.json) {
    nlohmann::json j;
    j["rows"] = rows.size();
    j["non_converged"] = non_converged;
    j["weights"] = {{"values", weights}, {"source", weight_source}};
    j["model"] = metrics_json(model_metrics);
    j["hard_voting"] = metrics_json(hard_metrics);
    j["weighted_voting"] = metrics_json(weighted_metrics);
    j["soft_voting"] = metrics_json(soft_metrics);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "evaluated " << rows.size() << " test rows";
    if (non_converged > 0) std::cout << " (" << non_converged << " non-converged)";
    std::cout << "\n";
    print_metrics_line("model           ", model_metrics);
    print_metrics_line("hard voting     ", hard_metrics);
    print_metrics_line("weighted voting ", weighted_metrics);
    print_metrics_line("soft voting     ", soft_metrics);
    std::cout << "weighted-vote weights (" << weight_source << "): l=" << fmt(weights[0], "%.4f")
              << " v=" << fmt(weights[1], "%.4f") << " a=" << fmt(weights[2], "%.4f") << "\n";
  }
  return kExitOk;
}

struct SynthArgs {
  std::string out_path;
  SynthConfig config;
};

int run_synth(const SynthArgs& args) {
  const std::vector<Record> records = generate_synthetic(args.config);
  save_csv(records, args.out_path);
  std::cout << "wrote " << records.size() << " rows (" << args.config.n_train << " train, "
            << args.config.n_valid << " valid, " << args.config.n_test << " test) to "
            << args.out_path << "\n";
  return kExitOk;
}

struct OracleArgs {
  std::string model_path;
  std::string data_path;
  int resolution = 61;
  int samples = 50;
  int restarts = 200;
  std::uint64_t seed = 42;
  bool raw_scores = false;
};

int run_oracle_check(const OracleArgs& args) {
  const FusionModel model = load_model(args.model_path);
  const LoadResult loaded = load_csv(args.data_path, {args.raw_scores});
  std::vector<Record> rows = rows_in_split(loaded.records, Split::kTest);
  if (rows.empty()) throw ParseError(args.data_path + ": no test rows");
  if (args.samples < 1) throw std::invalid_argument("--samples must be >= 1");

  // Seeded partial shuffle picks which rows to check.
  SplitMix64 rng(args.seed);
  const std::size_t n_check = std::min<std::size_t>(rows.size(), args.samples);
  for (std::size_t i = 0; i < n_check; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (rows.size() - i));
    std::swap(rows[i], rows[j]);
  }

  SolverConfig solver = default_utterance_fit_config();
  solver.n_restarts = args.restarts;
  solver.rng_seed = args.seed;

  constexpr double kTolerance = 1e-9;
  double max_violation = -std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < n_check; ++i) {
    const SampleProbs clamped = clamp_probs(rows[i].probs);
    const UtteranceState state = estimate_utterance_state(clamped, model.observables, solver);
    const GridResult grid =
        grid_oracle(make_utterance_system(clamped, model.observables), args.resolution);
    const double violation = state.solve_report.best_residual_ssq - grid.residual_ssq;
    max_violation = std::max(max_violation, violation);
    if (violation > kTolerance) {
      ++failures;
      std::cerr << "row " << rows[i].id << ": solver ssq "
                << fmt(state.solve_report.best_residual_ssq, "%.3e") << " > grid ssq "
                << fmt(grid.residual_ssq, "%.3e") << "\n";
    }
  }
  std::cout << "oracle check: " << n_check << " rows, resolution " << args.resolution
            << ", max solver-minus-grid ssq " << fmt(max_violation, "%.3e") << "\n";
  if (failures > 0) {
    std::cerr << failures << " rows exceeded the grid oracle by more than "
              << fmt(kTolerance, "%.0e") << "\n";
    return kExitError;
  }
  std::cout << "solver never lost to the grid\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-level multimodal sentiment fusion on a two-level quantum model"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit observables from training statistics");
  fit_cmd->add_option("--data", fit_args.data_path, "Dataset CSV")->required();
  fit_cmd->add_option("--out", fit_args.model_out, "Model file to write")->required();
  fit_cmd->add_option("--fit-on", fit_args.fit_on, "Rows to fit on")
      ->check(CLI::IsMember({"train+valid", "train"}))
      ->capture_default_str();
  fit_cmd->add_option("--restarts", fit_args.restarts, "Random restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit_args.seed, "RNG seed")
      ->envname("QFUSE_SEED")
      ->capture_default_str();
  fit_cmd->add_option("--mpos", fit_args.mpos, "Per-modality positive count reading")
      ->check(CLI::IsMember({"pred-rate", "true-pos"}))
      ->capture_default_str();
  fit_cmd->add_option("--corr-on", fit_args.corr_on, "Pearson correlation input")
      ->check(CLI::IsMember({"hard", "prob"}))
      ->capture_default_str();
  fit_cmd->add_flag("--raw-scores", fit_args.raw_scores,
                    "Label column holds raw scores, binarized as score >= 0");
  fit_cmd->add_flag("--json", fit_args.json, "Machine-readable report");

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict sentiment for test rows");
  predict_cmd->add_option("--model", predict_args.model_path, "Model file")->required();
  predict_cmd->add_option("--data", predict_args.data_path, "Dataset CSV")->required();
  predict_cmd->add_option("--out", predict_args.out_path, "Predictions CSV to write")->required();
  predict_cmd->add_option("--restarts", predict_args.restarts, "Random restarts per row")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  predict_cmd->add_option("--seed", predict_args.seed, "RNG seed")
      ->envname("QFUSE_SEED")
      ->capture_default_str();
  predict_cmd->add_option("--threads", predict_args.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  predict_cmd->add_option("--fallback", predict_args.fallback,
                          "Label source for non-converged rows")
      ->check(CLI::IsMember({"none", "soft-vote"}))
      ->capture_default_str();
  predict_cmd->add_flag("--raw-scores", predict_args.raw_scores,
                        "Label column holds raw scores, binarized as score >= 0");

  EvalArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score predictions and voting baselines on test rows");
  eval_cmd->add_option("--data", eval_args.data_path, "Dataset CSV")->required();
  eval_cmd->add_option("--model", eval_args.model_path, "Model file (predicts now)");
  eval_cmd->add_option("--pred", eval_args.pred_path, "Predictions CSV (joined by id)");
  eval_cmd->add_option("--weights", eval_args.weights_csv, "Weighted-vote weights, e.g. 3,1,1");
  eval_cmd->add_option("--restarts", eval_args.restarts, "Random restarts per row")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "RNG seed")
      ->envname("QFUSE_SEED")
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  eval_cmd->add_flag("--raw-scores", eval_args.raw_scores,
                     "Label column holds raw scores, binarized as score >= 0");
  eval_cmd->add_flag("--json", eval_args.json, "Machine-readable report");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
  synth_cmd->add_option("--out", synth_args.out_path, "Dataset CSV to write")->required();
  synth_cmd->add_option("--n-train", synth_args.config.n_train, "Train rows")
      ->capture_default_str();
  synth_cmd->add_option("--n-valid", synth_args.config.n_valid, "Validation rows")
      ->capture_default_str();
  synth_cmd->add_option("--n-test", synth_args.config.n_test, "Test rows")
      ->capture_default_str();
  synth_cmd->add_option("--pos-fraction", synth_args.config.pos_fraction,
                        "Positive label fraction, open (0, 1)")
      ->capture_default_str();
  synth_cmd->add_option("--acc-l", synth_args.config.accuracy[0], "Linguistic accuracy")
      ->capture_default_str();
  synth_cmd->add_option("--acc-v", synth_args.config.accuracy[1], "Visual accuracy")
      ->capture_default_str();
  synth_cmd->add_option("--acc-a", synth_args.config.accuracy[2], "Acoustic accuracy")
      ->capture_default_str();
  synth_cmd->add_option("--agreement", synth_args.config.agreement,
                        "Cross-modality agreement in [0, 1]")
      ->capture_default_str();
  synth_cmd->add_option("--concentration", synth_args.config.concentration,
                        "Confidence concentration, > 0")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.config.seed, "RNG seed")
      ->envname("QFUSE_SEED")
      ->capture_default_str();

  OracleArgs oracle_args;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-check", "Compare per-utterance solves against the brute-force grid oracle");
  oracle_cmd->add_option("--model", oracle_args.model_path, "Model file")->required();
  oracle_cmd->add_option("--data", oracle_args.data_path, "Dataset CSV")->required();
  oracle_cmd->add_option("--resolution", oracle_args.resolution, "Grid points per dimension")
      ->capture_default_str();
  oracle_cmd->add_option("--samples", oracle_args.samples, "Test rows to check")
      ->capture_default_str();
  oracle_cmd->add_option("--restarts", oracle_args.restarts, "Random restarts per row")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle_cmd->add_option("--seed", oracle_args.seed, "RNG seed")
      ->envname("QFUSE_SEED")
      ->capture_default_str();
  oracle_cmd->add_flag("--raw-scores", oracle_args.raw_scores,
                       "Label column holds raw scores, binarized as score >= 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (predict_cmd->parsed()) return run_predict(predict_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (oracle_cmd->parsed()) return run_oracle_check(oracle_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
