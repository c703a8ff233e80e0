#include "qfuse/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "qfuse/rng.hpp"

namespace qfuse {
namespace {

constexpr int kModelFormatVersion = 1;
constexpr double kProbLo = 1e-6;
constexpr double kProbHi = 1.0 - 1e-6;

const char* kDatasetHeader = "id,split,label,p_l,p_v,p_a";
const char* kPredictionsHeader = "id,label,pred,p_pos,eta,theta,phi,residual_ssq,converged";

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

[[noreturn]] void fail_cell(const std::string& path, std::size_t row, const char* column,
                            const std::string& why) {
  std::ostringstream msg;
  msg << path << ": row " << row << ", column '" << column << "': " << why;
  throw ParseError(msg.str());
}

int parse_label(const std::string& path, std::size_t row, const std::string& text,
                bool raw_scores) {
  if (raw_scores) {
    double score = 0.0;
    if (!parse_double(text, score)) fail_cell(path, row, "label", "not a numeric score");
    return score >= 0.0 ? +1 : -1;
  }
  if (text == "1" || text == "+1") return +1;
  if (text == "-1") return -1;
  fail_cell(path, row, "label", "must be 1 or -1 (use raw-score mode for graded labels)");
}

double parse_prob(const std::string& path, std::size_t row, const char* column,
                  const std::string& text) {
  double p = 0.0;
  if (!parse_double(text, p)) fail_cell(path, row, column, "not a number");
  if (p < 0.0 || p > 1.0) fail_cell(path, row, column, "probability outside [0, 1]");
  return p;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "valid") return Split::kValid;
  if (text == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + text + "' (expected train, valid, or test)");
}

LoadResult load_csv(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
  strip_cr(line);
  if (line != kDatasetHeader) {
    throw ParseError(path + ": bad header '" + line + "' (expected '" + kDatasetHeader + "')");
  }

  LoadResult result;
  std::unordered_set<std::string> seen_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != 6) {
      std::ostringstream msg;
      msg << path << ": row " << row << ": expected 6 columns, got " << fields.size();
      throw ParseError(msg.str());
    }

    Record rec;
    rec.id = fields[0];
    if (rec.id.empty()) fail_cell(path, row, "id", "must not be empty");
    if (!seen_ids.insert(rec.id).second) fail_cell(path, row, "id", "duplicate id '" + rec.id + "'");
    try {
      rec.split = split_from_string(fields[1]);
    } catch (const std::invalid_argument& e) {
      fail_cell(path, row, "split", e.what());
    }
    rec.label = parse_label(path, row, fields[2], options.raw_scores);

    const double pl = parse_prob(path, row, "p_l", fields[3]);
    const double pv = parse_prob(path, row, "p_v", fields[4]);
    const double pa = parse_prob(path, row, "p_a", fields[5]);
    rec.probs = clamp_probs({pl, pv, pa});
    if (rec.probs.p_l != pl || rec.probs.p_v != pv || rec.probs.p_a != pa) {
      ++result.clamped_rows;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void save_csv(const std::vector<Record>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << kDatasetHeader << '\n';
  for (const Record& r : records) {
    out << r.id << ',' << split_name(r.split) << ',' << r.label << ',' << fmt_double(r.probs.p_l)
        << ',' << fmt_double(r.probs.p_v) << ',' << fmt_double(r.probs.p_a) << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

std::vector<Record> generate_synthetic(const SynthConfig& config) {
  if (config.n_train < 1 || config.n_valid < 1 || config.n_test < 1) {
    throw std::invalid_argument("generate_synthetic: split sizes must be >= 1");
  }
  if (!(config.pos_fraction > 0.0 && config.pos_fraction < 1.0)) {
    throw std::invalid_argument("generate_synthetic: pos_fraction must lie in (0, 1)");
  }
  for (double acc : config.accuracy) {
    if (!(acc > 0.5 && acc <= 1.0)) {
      throw std::invalid_argument("generate_synthetic: accuracies must lie in (0.5, 1]");
    }
  }
  if (!(config.agreement >= 0.0 && config.agreement <= 1.0)) {
    throw std::invalid_argument("generate_synthetic: agreement must lie in [0, 1]");
  }
  if (!(config.concentration > 0.0)) {
    throw std::invalid_argument("generate_synthetic: concentration must be positive");
  }

  SplitMix64 rng(config.seed);
  std::vector<Record> records;
  records.reserve(static_cast<std::size_t>(config.n_train + config.n_valid + config.n_test));

  const std::array<std::pair<Split, int>, 3> plan = {{{Split::kTrain, config.n_train},
                                                      {Split::kValid, config.n_valid},
                                                      {Split::kTest, config.n_test}}};
  char id_buf[48];
  for (const auto& [split, count] : plan) {
    for (int i = 0; i < count; ++i) {
      Record rec;
      std::snprintf(id_buf, sizeof(id_buf), "%s-%06d", split_name(split), i + 1);
      rec.id = id_buf;
      rec.split = split;
      rec.label = rng.next_double() < config.pos_fraction ? +1 : -1;

      // One latent draw shared across modalities; each modality swaps it in
      // with probability `agreement`, which ties their correctness together
      // without moving the marginal accuracy.
      const double shared = rng.next_double();
      std::array<double, kNumModalities> p{};
      for (int m = 0; m < kNumModalities; ++m) {
        const bool use_shared = rng.next_double() < config.agreement;
        const double draw = use_shared ? shared : rng.next_double();
        const bool correct = draw < config.accuracy[m];
        const int pred = correct ? rec.label : -rec.label;
        // Confidence in (0.5, 1]: Beta(concentration, 1) scaled onto the
        // predicted side, sampled by inverse CDF.
        const double conf =
            0.5 + 0.5 * std::pow(rng.next_double_pos(), 1.0 / config.concentration);
        p[m] = pred > 0 ? conf : 1.0 - conf;
      }
      rec.probs = clamp_probs({p[0], p[1], p[2]});
      records.push_back(std::move(rec));
    }
  }
  return records;
}

namespace {

nlohmann::json report_to_json(const SolveReport& r) {
  return {{"best_residual_ssq", r.best_residual_ssq},
          {"restarts_run", r.restarts_run},
          {"restarts_failed", r.restarts_failed},
          {"iterations_total", r.iterations_total},
          {"converged", r.converged},
          {"seed", r.seed}};
}

SolveReport report_from_json(const nlohmann::json& j) {
  SolveReport r;
  r.best_residual_ssq = j.at("best_residual_ssq").get<double>();
  r.restarts_run = j.at("restarts_run").get<int>();
  r.restarts_failed = j.at("restarts_failed").get<int>();
  r.iterations_total = j.at("iterations_total").get<long long>();
  r.converged = j.at("converged").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

const char* mpos_name(MposInterpretation m) {
  return m == MposInterpretation::kPredictedRate ? "pred-rate" : "true-pos";
}

const char* corr_input_name(CorrInput c) {
  return c == CorrInput::kHardPredictions ? "hard" : "prob";
}

}  // namespace

void save_model(const FusionModel& model, const std::string& path) {
  const ObservableSet& obs = model.observables;
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["angles"] = {{"theta_g", obs.g.theta},       {"theta_l", obs.obs_l.angles.theta},
                 {"theta_v", obs.obs_v.angles.theta}, {"theta_a", obs.obs_a.angles.theta},
                 {"phi_l", obs.obs_l.angles.phi},     {"phi_v", obs.obs_v.angles.phi},
                 {"phi_a", obs.obs_a.angles.phi}};
  j["stats"] = {{"pos_rate", model.training_stats.pos_rate},
                {"modality_pos_rate", model.training_stats.modality_pos_rate},
                {"pairwise_corr", model.training_stats.pairwise_corr},
                {"n_samples", model.training_stats.n_samples},
                {"degenerate_corr", model.training_stats.degenerate_corr}};
  j["solver_config"] = {{"n_restarts", model.options.solver.n_restarts},
                        {"max_iterations", model.options.solver.max_iterations},
                        {"convergence_threshold", model.options.solver.convergence_threshold},
                        {"step_tolerance", model.options.solver.step_tolerance},
                        {"rng_seed", model.options.solver.rng_seed}};
  j["stat_options"] = {{"mpos", mpos_name(model.options.stats.mpos)},
                       {"corr_on", corr_input_name(model.options.stats.corr_on)}};
  j["fit_report"] = report_to_json(obs.fit_report);
  j["modality_accuracy"] = model.modality_accuracy;

  std::ofstream out(path);
  if (!out) throw ModelIoError(path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ModelIoError(path + ": write failed");
}

FusionModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelIoError(path + ": cannot open file");

  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelIoError(path + ": corrupt model file: " + e.what());
  }

  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelIoError(path + ": unsupported model format version " + std::to_string(version));
    }

    FusionModel model;
    const nlohmann::json& angles = j.at("angles");
    ObservableSet& obs = model.observables;
    obs.g = BlochState(angles.at("theta_g").get<double>(), 0.0);
    obs.obs_l = Observable{
        BlochState(angles.at("theta_l").get<double>(), angles.at("phi_l").get<double>())};
    obs.obs_v = Observable{
        BlochState(angles.at("theta_v").get<double>(), angles.at("phi_v").get<double>())};
    obs.obs_a = Observable{
        BlochState(angles.at("theta_a").get<double>(), angles.at("phi_a").get<double>())};
    obs.fit_report = report_from_json(j.at("fit_report"));

    const nlohmann::json& stats = j.at("stats");
    model.training_stats.pos_rate = stats.at("pos_rate").get<double>();
    model.training_stats.modality_pos_rate =
        stats.at("modality_pos_rate").get<std::array<double, kNumModalities>>();
    model.training_stats.pairwise_corr = stats.at("pairwise_corr").get<std::array<double, 3>>();
    model.training_stats.n_samples = stats.at("n_samples").get<std::size_t>();
    model.training_stats.degenerate_corr = stats.at("degenerate_corr").get<bool>();

    const nlohmann::json& solver = j.at("solver_config");
    model.options.solver.n_restarts = solver.at("n_restarts").get<int>();
    model.options.solver.max_iterations = solver.at("max_iterations").get<int>();
    model.options.solver.convergence_threshold = solver.at("convergence_threshold").get<double>();
    model.options.solver.step_tolerance = solver.at("step_tolerance").get<double>();
    model.options.solver.rng_seed = solver.at("rng_seed").get<std::uint64_t>();

    const nlohmann::json& stat_options = j.at("stat_options");
    const std::string mpos = stat_options.at("mpos").get<std::string>();
    if (mpos == "pred-rate") {
      model.options.stats.mpos = MposInterpretation::kPredictedRate;
    } else if (mpos == "true-pos") {
      model.options.stats.mpos = MposInterpretation::kTruePositiveRate;
    } else {
      throw ModelIoError(path + ": unknown mpos interpretation '" + mpos + "'");
    }
    const std::string corr_on = stat_options.at("corr_on").get<std::string>();
    if (corr_on == "hard") {
      model.options.stats.corr_on = CorrInput::kHardPredictions;
    } else if (corr_on == "prob") {
      model.options.stats.corr_on = CorrInput::kProbabilities;
    } else {
      throw ModelIoError(path + ": unknown corr_on input '" + corr_on + "'");
    }

    model.modality_accuracy =
        j.at("modality_accuracy").get<std::array<double, kNumModalities>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelIoError(path + ": corrupt model file: " + e.what());
  }
}

void save_predictions(const std::vector<Prediction>& predictions,
                      const std::vector<Record>& records, const std::string& path) {
  if (predictions.size() != records.size()) {
    throw std::invalid_argument("save_predictions: prediction/record count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << kPredictionsHeader << '\n';
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Prediction& p = predictions[i];
    out << records[i].id << ',' << records[i].label << ',' << p.label << ','
        << fmt_double(p.p_pos) << ',' << fmt_double(p.state.eta) << ','
        << fmt_double(p.state.angles.theta) << ',' << fmt_double(p.state.angles.phi) << ','
        << fmt_double(p.state.solve_report.best_residual_ssq) << ',' << (p.converged ? 1 : 0)
        << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

std::vector<PredictionRow> load_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
  strip_cr(line);
  if (line != kPredictionsHeader) {
    throw ParseError(path + ": bad header '" + line + "' (expected '" + kPredictionsHeader +
                     "')");
  }

  std::vector<PredictionRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != 9) {
      std::ostringstream msg;
      msg << path << ": row " << row << ": expected 9 columns, got " << fields.size();
      throw ParseError(msg.str());
    }
    PredictionRow r;
    r.id = fields[0];
    r.label = parse_label(path, row, fields[1], false);
    r.pred = parse_label(path, row, fields[2], false);
    const auto num = [&](const char* col, const std::string& text) {
      double v = 0.0;
      if (!parse_double(text, v)) fail_cell(path, row, col, "not a number");
      return v;
    };
    r.p_pos = num("p_pos", fields[3]);
    r.eta = num("eta", fields[4]);
    r.theta = num("theta", fields[5]);
    r.phi = num("phi", fields[6]);
    r.residual_ssq = num("residual_ssq", fields[7]);
    if (fields[8] == "1") r.converged = true;
    else if (fields[8] == "0") r.converged = false;
    else fail_cell(path, row, "converged", "must be 0 or 1");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Record> rows_in_split(const std::vector<Record>& records, Split split) {
  std::vector<Record> out;
  for (const Record& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::vector<LabeledSample> to_samples(const std::vector<Record>& records) {
  std::vector<LabeledSample> out;
  out.reserve(records.size());
  for (const Record& r : records) out.push_back({r.label, r.probs});
  return out;
}

}  // namespace qfuse
