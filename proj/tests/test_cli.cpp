#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "qfuse/data.hpp"

using namespace qfuse;

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
#ifdef QFUSE_CLI_PATH
  return QFUSE_CLI_PATH;
#else
  return "./qfuse";
#endif
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + cli_path() + "\" " + args;
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

fs::path work_dir() {
  const fs::path dir = fs::current_path() / "cli_test_work";
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One small synthetic dataset and fitted model shared by the tests below.
struct Fixture {
  fs::path data;
  fs::path model;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    const fs::path dir = work_dir();
    f.data = dir / "data.csv";
    f.model = dir / "model.json";
    REQUIRE(run_cli("synth --out " + q(f.data) +
                    " --n-train 240 --n-valid 60 --n-test 40 --seed 11") == 0);
    const int fit_code = run_cli("fit --data " + q(f.data) + " --out " + q(f.model) +
                                 " --restarts 80 --seed 11 > /dev/null");
    REQUIRE((fit_code == 0 || fit_code == 2));
    return f;
  }();
  return fx;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes a loadable dataset with the requested split sizes") {
  const fs::path out = work_dir() / "synth_default.csv";
  REQUIRE(run_cli("synth --out " + q(out) + " --n-train 30 --n-valid 5 --n-test 5") == 0);
  const LoadResult loaded = load_csv(out.string());
  CHECK(loaded.records.size() == 40);
  CHECK(rows_in_split(loaded.records, Split::kTrain).size() == 30);
  CHECK(rows_in_split(loaded.records, Split::kTest).size() == 5);
}

TEST_CASE("synth rejects out-of-range settings") {
  const fs::path out = work_dir() / "synth_bad.csv";
  CHECK(run_cli("synth --out " + q(out) + " --pos-fraction 1.0 2> /dev/null") == 1);
  CHECK(run_cli("synth --out " + q(out) + " --acc-l 0.4 2> /dev/null") == 1);
}

TEST_CASE("fit writes a model and repeats byte-identically under one seed") {
  const fs::path dir = work_dir();
  const fs::path model_a = dir / "model_a.json";
  const fs::path model_b = dir / "model_b.json";
  const std::string base = "fit --data " + q(fixture().data) + " --restarts 60 --seed 7 ";
  const int code_a = run_cli(base + "--out " + q(model_a) + " > /dev/null");
  const int code_b = run_cli(base + "--out " + q(model_b) + " > /dev/null");
  CHECK((code_a == 0 || code_a == 2));
  CHECK(code_a == code_b);
  const std::string bytes_a = read_file(model_a);
  REQUIRE_FALSE(bytes_a.empty());
  CHECK(bytes_a == read_file(model_b));
}

TEST_CASE("fit fails cleanly without train rows") {
  const fs::path dir = work_dir();
  const fs::path test_only = dir / "test_only.csv";
  std::ofstream out(test_only);
  out << "id,split,label,p_l,p_v,p_a\nt1,test,1,0.9,0.8,0.7\nt2,test,-1,0.1,0.2,0.3\n";
  out.close();
  CHECK(run_cli("fit --data " + q(test_only) + " --out " + q(dir / "no_model.json") +
                " 2> /dev/null") == 1);
  CHECK(run_cli("fit --data " + q(dir / "absent.csv") + " --out " + q(dir / "no_model.json") +
                " 2> /dev/null") == 1);
}

TEST_CASE("fit honors the interpretation flags") {
  const fs::path dir = work_dir();
  const fs::path model = dir / "model_fitflags.json";
  const int code = run_cli("fit --data " + q(fixture().data) + " --out " + q(model) +
                           " --restarts 40 --fit-on train --mpos true-pos --corr-on prob"
                           " > /dev/null");
  CHECK((code == 0 || code == 2));
  const FusionModel loaded = load_model(model.string());
  CHECK(loaded.options.stats.mpos == MposInterpretation::kTruePositiveRate);
  CHECK(loaded.options.stats.corr_on == CorrInput::kProbabilities);
}

TEST_CASE("predict writes one row per test sample") {
  const fs::path preds = work_dir() / "preds.csv";
  const int code = run_cli("predict --model " + q(fixture().model) + " --data " +
                           q(fixture().data) + " --out " + q(preds) +
                           " --restarts 30 --seed 11 > /dev/null");
  CHECK((code == 0 || code == 2));
  const std::vector<PredictionRow> rows = load_predictions_csv(preds.string());
  CHECK(rows.size() == 40);
  for (const PredictionRow& r : rows) {
    CHECK(r.p_pos >= 0.0);
    CHECK(r.p_pos <= 1.0);
    CHECK(r.eta >= 0.0);
    CHECK(r.eta <= 1.0);
  }
}

TEST_CASE("predict is byte-deterministic for a fixed seed") {
  const fs::path a = work_dir() / "preds_a.csv";
  const fs::path b = work_dir() / "preds_b.csv";
  const std::string base = "predict --model " + q(fixture().model) + " --data " +
                           q(fixture().data) + " --restarts 30 --seed 3 ";
  const int code_a = run_cli(base + "--out " + q(a) + " > /dev/null");
  const int code_b = run_cli(base + "--out " + q(b) + " > /dev/null");
  CHECK(code_a == code_b);
  const std::string bytes = read_file(a);
  REQUIRE_FALSE(bytes.empty());
  CHECK(bytes == read_file(b));
}

TEST_CASE("predict needs an existing model and test rows") {
  const fs::path dir = work_dir();
  CHECK(run_cli("predict --model " + q(dir / "absent_model.json") + " --data " +
                q(fixture().data) + " --out " + q(dir / "x.csv") + " 2> /dev/null") == 1);

  const fs::path train_only = dir / "train_only.csv";
  std::ofstream out(train_only);
  out << "id,split,label,p_l,p_v,p_a\nr1,train,1,0.9,0.8,0.7\n";
  out.close();
  CHECK(run_cli("predict --model " + q(fixture().model) + " --data " + q(train_only) +
                " --out " + q(dir / "x.csv") + " 2> /dev/null") == 1);
}

TEST_CASE("eval reports model metrics next to all three voting baselines") {
  const fs::path preds = work_dir() / "preds_eval.csv";
  const int pcode = run_cli("predict --model " + q(fixture().model) + " --data " +
                            q(fixture().data) + " --out " + q(preds) +
                            " --restarts 30 --seed 11 > /dev/null");
  REQUIRE((pcode == 0 || pcode == 2));

  const fs::path report = work_dir() / "eval.txt";
  CHECK(run_cli("eval --data " + q(fixture().data) + " --pred " + q(preds) + " > " +
                q(report)) == 0);
  const std::string text = read_file(report);
  CHECK(text.find("model") != std::string::npos);
  CHECK(text.find("hard voting") != std::string::npos);
  CHECK(text.find("weighted voting") != std::string::npos);
  CHECK(text.find("soft voting") != std::string::npos);

  // The same rows scored through the model path, with explicit weights.
  CHECK(run_cli("eval --data " + q(fixture().data) + " --model " + q(fixture().model) +
                " --restarts 20 --weights 3,1,1 > /dev/null") == 0);
}

TEST_CASE("eval argument validation") {
  const fs::path dir = work_dir();
  CHECK(run_cli("eval --data " + q(fixture().data) + " 2> /dev/null") == 1);

  const fs::path train_only = dir / "eval_train_only.csv";
  std::ofstream out(train_only);
  out << "id,split,label,p_l,p_v,p_a\nr1,train,1,0.9,0.8,0.7\n";
  out.close();
  CHECK(run_cli("eval --data " + q(train_only) + " --model " + q(fixture().model) +
                " 2> /dev/null") == 1);
}

TEST_CASE("oracle-check accepts the solver and validates its flags") {
  CHECK(run_cli("oracle-check --model " + q(fixture().model) + " --data " + q(fixture().data) +
                " --samples 5 --resolution 21 --restarts 40 > /dev/null") == 0);
  CHECK(run_cli("oracle-check --model " + q(fixture().model) + " --data " + q(fixture().data) +
                " --resolution 1 2> /dev/null") == 1);
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
  CHECK(run_cli("2> /dev/null") == 1);
  CHECK(run_cli("fit --nope 2> /dev/null") == 1);
  CHECK(run_cli("--help > /dev/null") == 0);
}

}  // TEST_SUITE
