#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "spreadlab/cli.hpp"
#include "spreadlab/interpret.hpp"
#include "spreadlab/serialize.hpp"
#include "spreadlab/synth.hpp"
#include "support.hpp"

using namespace spreadlab;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spreadlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int saved = max_threads();
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  set_threads(saved);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class Workdir {
 public:
  explicit Workdir(const std::string& name) : dir_(fs::temp_directory_path() / ("spreadlab_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }
  std::string operator()(const std::string& file) const { return (dir_ / file).string(); }

 private:
  fs::path dir_;
};

const std::string kSource = SPREADLAB_SOURCE_DIR;

}  // namespace

TEST_CASE("help and usage errors") {
  const auto top = run_cli({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"synth", "fit", "predict", "interpret", "evaluate", "--seed", "--threads", "--config"}) {
    CHECK(top.out.find(sub) != std::string::npos);
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> flags{
      {"synth", {"--n", "--noise-sd", "--truth", "--out", "--meta"}},
      {"fit",
       {"--data", "--model", "--params", "--tune", "--grid", "--features", "--interactions", "--scale", "--direction",
        "--lambda", "--folds", "--out", "--report"}},
      {"predict", {"--model", "--data", "--train", "--method", "--alpha", "--split-ratio", "--out", "--summary"}},
      {"interpret",
       {"--model", "--data", "--out", "--importance", "--ale", "--ale2", "--bins", "--bins2", "--conditional",
        "--scenario", "--grid-points", "--grid-lo", "--grid-hi", "--intervals", "--alpha"}},
      {"evaluate",
       {"--data", "--models", "--params", "--grid", "--no-tune", "--freeze-formula", "--direction", "--splits",
        "--train-frac", "--alpha", "--out", "--rows"}}};
  for (const auto& [sub, names] : flags) {
    const auto h = run_cli({sub, "--help"});
    CHECK(h.code == 0);
    for (const auto& f : names) CHECK_MESSAGE(h.out.find(f) != std::string::npos, sub << " " << f);
  }
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"synth", "--out", "x.csv", "--bogus"}).code == 2);
  CHECK(run_cli({"synth"}).code == 2);
  CHECK(run_cli({"train"}).code == 2);
}

TEST_CASE("synth writes a valid, reproducible sample") {
  Workdir w("synth");
  const auto r = run_cli({"--seed", "1", "synth", "--n", "765", "--out", w("bonds.csv")});
  REQUIRE(r.code == 0);
  const auto data = load_csv(w("bonds.csv"), FeatureSpec{});
  CHECK(data.n() == 765);
  const auto meta = io::read_json(w("bonds.csv.meta.json"));
  CHECK(meta["seed"] == 1);

  ScenarioConfig c;
  c.seed = 1;
  CHECK(data == generate(c).data);

  CHECK(run_cli({"--seed", "1", "synth", "--out", w("again.csv")}).code == 0);
  CHECK(slurp(w("bonds.csv")) == slurp(w("again.csv")));

  const auto bad = run_cli({"synth", "--n", "0", "--out", w("none.csv")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("n >= 1") != std::string::npos);
  CHECK(run_cli({"synth", "--truth", "cubic", "--out", w("none.csv")}).code == 2);
  CHECK(run_cli({"synth", "--out", "/nonexistent/dir/bonds.csv"}).code == 3);
}

TEST_CASE("config file values sit between defaults and flags") {
  Workdir w("config");
  {
    std::ofstream cfg(w("run.toml"));
    cfg << "seed = 7\n\n[synth]\nn = 40\nout = \"" << w("cfg.csv") << "\"\n";
  }
  REQUIRE(run_cli({"--config", w("run.toml"), "synth"}).code == 0);
  CHECK(load_csv(w("cfg.csv"), FeatureSpec{}).n() == 40);
  CHECK(io::read_json(w("cfg.csv.meta.json"))["seed"] == 7);
  REQUIRE(run_cli({"--config", w("run.toml"), "--seed", "8", "synth", "--n", "30"}).code == 0);
  CHECK(load_csv(w("cfg.csv"), FeatureSpec{}).n() == 30);
  CHECK(io::read_json(w("cfg.csv.meta.json"))["seed"] == 8);
  CHECK(run_cli({"--config", w("missing.toml"), "synth"}).code == 2);
}

TEST_CASE("fit reports and saved models") {
  Workdir w("fit");
  REQUIRE(run_cli({"synth", "--n", "300", "--out", w("train.csv")}).code == 0);

  SUBCASE("gbm with the tuned defaults grows 800 trees") {
    const auto r = run_cli({"fit", "--data", w("train.csv"), "--model", "gbm", "--params", kSource + "/configs/tuned_gbm.json",
                        "--out", w("gbm.json")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rounds 800") != std::string::npos);
    CHECK(r.out.find("final_train_mse") != std::string::npos);
    const auto m = io::load_model(w("gbm.json"));
    REQUIRE(m.ensemble);
    CHECK(m.ensemble->trees.size() == 800);
    CHECK(m.ensemble->hyperparams.lambda == 400.0);
  }

  SUBCASE("exact linear response gives r2 = 1") {
    auto d = load_csv(w("train.csv"), FeatureSpec{});
    for (auto& rec : d.records) rec.spread = 150.0 + 80.0 * rec[Predictor::EL];
    {
      std::ofstream out(w("exact.csv"));
      write_csv(d, out);
    }
    const auto r = run_cli({"fit", "--data", w("exact.csv"), "--model", "ols", "--features", "EL", "--out", w("ols.json")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("r2 1.000000") != std::string::npos);
    const auto m = io::load_model(w("ols.json"));
    REQUIRE(m.linear);
    CHECK(m.linear->coef[0] == doctest::Approx(80.0 / 1e4));
  }

  SUBCASE("stepwise lists the selection and its AIC trace") {
    const auto r = run_cli({"fit", "--data", w("train.csv"), "--model", "stepwise", "--out", w("step.json"), "--report",
                        w("step.txt")});
    REQUIRE(r.code == 0);
    const auto report = slurp(w("step.txt"));
    const auto m = io::load_model(w("step.json"));
    REQUIRE(m.linear);
    CHECK(report.find("method stepwise") != std::string::npos);
    CHECK(report.find("step  action  term") != std::string::npos);
    for (const auto& name : m.linear->feature_names) CHECK(report.find(name) != std::string::npos);
    CHECK_FALSE(m.linear->trace.empty());
  }

  SUBCASE("rank deficiency names the column and exits 4") {
    auto d = load_csv(w("train.csv"), FeatureSpec{});
    for (auto& rec : d.records) rec[Predictor::TERM] = 24.0;
    {
      std::ofstream out(w("flat.csv"));
      write_csv(d, out);
    }
    const auto r = run_cli({"fit", "--data", w("flat.csv"), "--model", "ols", "--out", w("flat.json")});
    CHECK(r.code == 4);
    CHECK(r.err.find("TERM") != std::string::npos);
  }

  SUBCASE("configuration and input errors") {
    CHECK(run_cli({"fit", "--data", w("train.csv"), "--model", "mean", "--out", w("m.json")}).code == 2);
    CHECK(run_cli({"fit", "--data", w("train.csv"), "--features", "EL,XYZ", "--out", w("m.json")}).code == 2);
    CHECK(run_cli({"fit", "--data", w("nope.csv"), "--out", w("m.json")}).code == 3);
    {
      std::ofstream bad(w("bad.json"));
      bad << R"({"depth": 3})";
    }
    CHECK(run_cli({"fit", "--data", w("train.csv"), "--params", w("bad.json"), "--out", w("m.json")}).code == 2);
  }
}

TEST_CASE("predict intervals") {
  Workdir w("predict");
  REQUIRE(run_cli({"--seed", "1", "synth", "--n", "400", "--truth", "linear", "--out", w("train.csv")}).code == 0);
  REQUIRE(run_cli({"--seed", "2", "synth", "--n", "2000", "--truth", "linear", "--out", w("test.csv")}).code == 0);
  REQUIRE(run_cli({"fit", "--data", w("train.csv"), "--model", "ols", "--out", w("ols.json")}).code == 0);

  const auto jp = run_cli({"predict", "--model", w("ols.json"), "--data", w("test.csv"), "--train", w("train.csv"),
                       "--method", "jackknife_plus", "--out", w("jp.csv"), "--summary", w("jp.json")});
  REQUIRE(jp.code == 0);
  const auto summary = io::read_json(w("jp.json"));
  CHECK(summary["rows"] == 2000);
  CHECK(summary["method"] == "jackknife_plus");
  CHECK(summary["coverage"].get<double>() >= 0.93);
  CHECK(summary["coverage"].get<double>() <= 0.97);

  REQUIRE(run_cli({"predict", "--model", w("ols.json"), "--data", w("test.csv"), "--train", w("train.csv"), "--method",
               "jackknife_plus", "--alpha", "0.5", "--out", w("half.csv")})
              .code == 0);
  const auto wide = read_rows(w("jp.csv"));
  const auto narrow = read_rows(w("half.csv"));
  REQUIRE(wide.size() == narrow.size());
  for (std::size_t i = 0; i < wide.size(); ++i) CHECK(std::stod(narrow[i][4]) < std::stod(wide[i][4]));

  const auto normal = run_cli({"predict", "--model", w("ols.json"), "--data", w("test.csv"), "--out", w("ols.csv")});
  REQUIRE(normal.code == 0);
  CHECK(read_rows(w("ols.csv")).size() == 2000);

  auto one = load_csv(w("test.csv"), FeatureSpec{});
  one.records.resize(1);
  {
    std::ofstream out(w("one.csv"));
    write_csv(one, out);
  }
  REQUIRE(run_cli({"predict", "--model", w("ols.json"), "--data", w("one.csv"), "--train", w("train.csv"), "--method",
               "jackknife_plus", "--out", w("one_out.csv")})
              .code == 0);
  const auto single = read_rows(w("one_out.csv"));
  REQUIRE(single.size() == 1);
  CHECK(std::isfinite(std::stod(single[0][2])));
  CHECK(std::isfinite(std::stod(single[0][3])));

  auto doc = io::read_json(w("ols.json"));
  doc["version"] = 99;
  io::write_text(w("future.json"), doc.dump());
  CHECK(run_cli({"predict", "--model", w("future.json"), "--data", w("test.csv"), "--out", w("x.csv")}).code == 2);
  CHECK(run_cli({"predict", "--model", w("ols.json"), "--data", w("test.csv"), "--method", "jackknife_plus", "--out",
             w("x.csv")})
            .code == 2);
  CHECK(run_cli({"predict", "--model", w("ols.json"), "--data", w("test.csv"), "--method", "magic", "--out", w("x.csv")})
            .code == 2);
}

TEST_CASE("interpret outputs") {
  Workdir w("interpret");
  REQUIRE(run_cli({"synth", "--n", "300", "--out", w("train.csv")}).code == 0);
  REQUIRE(run_cli({"fit", "--data", w("train.csv"), "--model", "gbm", "--params", kSource + "/configs/quick_gbm.json",
               "--out", w("gbm.json")})
              .code == 0);
  const auto r = run_cli({"interpret", "--model", w("gbm.json"), "--data", w("train.csv"), "--out", w("g"), "--importance",
                      "--ale", "EL", "--ale2", "EL", "SIZE", "--conditional", "EL", "--scenario", "ROLX"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(w("g_importance.csv")));
  CHECK(fs::exists(w("g_ale2_EL_SIZE.csv")));

  const auto ale = io::read_json(w("g_ale_EL.json"));
  const auto effects = ale["effects"].get<std::vector<double>>();
  const auto counts = ale["counts"].get<std::vector<double>>();
  double centre = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) centre += counts[j] * 0.5 * (effects[j] + effects[j + 1]);
  CHECK(std::abs(centre) < 1e-12);

  const auto rows = read_rows(w("g_conditional_EL_by_ROLX.csv"));
  const auto anchors = interpret::scenario_anchors(load_csv(w("train.csv"), FeatureSpec{}), Predictor::ROLX);
  std::map<std::string, double> seen;
  for (const auto& row : rows) seen[row[0]] = std::stod(row[1]);
  REQUIRE(seen.size() == 3);
  for (const auto& a : anchors) CHECK(seen.at(a.label) == doctest::Approx(a.value).epsilon(1e-12));
  CHECK(rows.size() == 150);

  CHECK(run_cli({"interpret", "--model", w("gbm.json"), "--data", w("train.csv"), "--out", w("g"), "--ale", "XYZ"}).code ==
        2);
}

TEST_CASE("evaluate writes a report") {
  Workdir w("evaluate");
  REQUIRE(run_cli({"synth", "--n", "120", "--out", w("bonds.csv")}).code == 0);
  const auto r = run_cli({"evaluate", "--data", w("bonds.csv"), "--models", "gbm,stepwise", "--params",
                      kSource + "/configs/quick_gbm.json", "--no-tune", "--splits", "1", "--out", w("report.json"),
                      "--rows", w("rows.csv")});
  REQUIRE(r.code == 0);
  const auto report = io::read_json(w("report.json"));
  CHECK(report["n_splits"] == 1);
  REQUIRE(report["models"].size() == 2);
  for (const auto& m : report["models"]) {
    CHECK(m["completed"] == 1);
    CHECK(m["mean_mse"].get<double>() > 0.0);
    CHECK(m["mean_coverage"].is_number());
    CHECK(m["mean_length_bps"].get<double>() > 0.0);
  }
  CHECK(read_rows(w("rows.csv")).size() == 2);
  CHECK(run_cli({"evaluate", "--data", w("missing.csv"), "--out", w("x.json")}).code == 3);
  CHECK(run_cli({"evaluate", "--data", w("bonds.csv"), "--models", "forest", "--out", w("x.json")}).code == 2);
}

TEST_CASE("every subcommand is byte-for-byte reproducible with threads") {
  Workdir w("determinism");
  const auto params = kSource + "/configs/quick_gbm.json";
  const auto pass = [&](const std::string& tag) {
    fs::create_directories(w("run"));
    const auto t = [&](const std::string& f) { return w("run/" + f); };
    const std::vector<std::vector<std::string>> steps{
        {"--threads", "4", "--seed", "5", "synth", "--n", "150", "--out", t("bonds.csv")},
        {"--threads", "4", "--seed", "5", "fit", "--data", t("bonds.csv"), "--model", "gbm", "--params", params,
         "--out", t("gbm.json"), "--report", t("gbm.txt")},
        {"--threads", "4", "--seed", "5", "fit", "--data", t("bonds.csv"), "--model", "stepwise", "--out",
         t("step.json"), "--report", t("step.txt")},
        {"--threads", "4", "--seed", "5", "predict", "--model", t("gbm.json"), "--data", t("bonds.csv"), "--train",
         t("bonds.csv"), "--method", "jackknife_plus", "--out", t("pred.csv"), "--summary", t("pred.json")},
        {"--threads", "4", "--seed", "5", "evaluate", "--data", t("bonds.csv"), "--models", "gbm,stepwise", "--params",
         params, "--splits", "3", "--out", t("eval.json"), "--rows", t("eval.csv")}};
    for (const auto& s : steps) REQUIRE(run_cli(s).code == 0);
    fs::rename(w("run"), w(tag));
  };
  pass("a");
  pass("b");
  for (const char* f : {"bonds.csv", "gbm.json", "gbm.txt", "step.json", "step.txt", "pred.csv", "pred.json",
                        "eval.json", "eval.csv"}) {
    CHECK_MESSAGE(slurp(w(std::string("a/") + f)) == slurp(w(std::string("b/") + f)), f);
  }
}
