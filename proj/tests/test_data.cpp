#include <sstream>

#include "spreadlab/data.hpp"
#include "spreadlab/synth.hpp"
#include "support.hpp"

using namespace spreadlab;
using testing::error_kind;
using testing::error_message;

namespace {

BondRecord valid_record() {
  BondRecord r;
  r.spread = 500.0;
  r[Predictor::EL] = 2.0;
  r[Predictor::PFL] = 3.0;
  r[Predictor::SIZE] = 100.0;
  r[Predictor::TERM] = 36.0;
  r[Predictor::US] = 1.0;
  r[Predictor::ROLX] = 110.0;
  return r;
}

Dataset small_dataset() {
  ScenarioConfig c;
  c.n = 25;
  c.seed = 4;
  return generate(c).data;
}

}  // namespace

TEST_CASE("predictor names round-trip") {
  for (auto p : all_predictors()) CHECK(parse_predictor(name(p)) == p);
  CHECK(name(Predictor::GC_US) == "GC.US");
  CHECK_FALSE(parse_predictor("NOPE").has_value());
  CHECK(is_binary(Predictor::INDEM));
  CHECK_FALSE(is_binary(Predictor::EL));
}

TEST_CASE("csv round trip preserves every value") {
  const auto data = small_dataset();
  std::stringstream ss;
  write_csv(data, ss);
  const auto back = read_csv(ss, FeatureSpec::full_linear());
  CHECK(back == data);
}

TEST_CASE("csv with a subset of columns keeps only those names") {
  std::istringstream in("EL,SPREAD,SIZE,TERM\n1.5,300,50,24\n0.5,200,80,12\n");
  FeatureSpec spec;
  spec.predictors = {Predictor::EL, Predictor::SIZE};
  const auto data = read_csv(in, spec);
  CHECK(data.n() == 2);
  CHECK(data.feature_names == std::vector<std::string>{"EL", "SIZE", "TERM"});
  CHECK(data.records[1].spread == 200.0);
  CHECK(data.records[1][Predictor::SIZE] == 80.0);
  CHECK_FALSE(data.has(Predictor::PFL));
}

TEST_CASE("csv errors") {
  FeatureSpec el;
  el.predictors = {Predictor::EL};
  auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in, el);
  };
  CHECK(error_kind([&] { parse("EL,SIZE\n1,2\n"); }) == "MissingColumn");
  CHECK(error_kind([&] { parse("SPREAD,SIZE,TERM\n1,2,3\n"); }) == "MissingColumn");
  CHECK(error_kind([&] { parse("SPREAD,EL,SIZE,TERM\n100,abc,1,1\n"); }) == "ParseError");
  CHECK(error_kind([&] { parse("SPREAD,EL,SIZE,TERM\n100,1\n"); }) == "ParseError");
  CHECK(error_kind([&] { parse("SPREAD,EL,SIZE,TERM\n"); }) == "InvariantViolation");
  CHECK(error_kind([&] { parse(""); }) == "InvariantViolation");
  CHECK(error_message([&] { parse("SPREAD,EL,SIZE,TERM\n100,1,1,1\n-5,1,1,1\n"); }).find("row 2") !=
        std::string::npos);
  CHECK(error_kind([] { load_csv("/nonexistent/bonds.csv", FeatureSpec{}); }) == "IoError");
}

TEST_CASE("record invariants") {
  CHECK_NOTHROW(validate_record(valid_record(), 1));
  auto bad = [](auto mutate) {
    auto r = valid_record();
    mutate(r);
    return error_kind([&] { validate_record(r, 1); });
  };
  CHECK(bad([](BondRecord& r) { r.spread = 0.0; }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) { r[Predictor::EL] = -0.1; }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) { r[Predictor::SIZE] = 0.0; }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) { r[Predictor::INDEM] = 0.5; }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) { r[Predictor::EU] = 1.0; }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) {
          r[Predictor::WIND] = 1.0;
          r[Predictor::EQ] = 1.0;
        }) == "InvariantViolation");
  CHECK(bad([](BondRecord& r) { r[Predictor::ROLX] = std::nan(""); }) == "InvariantViolation");
}

TEST_CASE("feature specs") {
  const auto full = FeatureSpec::full_linear();
  CHECK(full.width() == 22);
  const auto names = full.column_names();
  CHECK(names[19] == "US*GC.US");
  CHECK(names[20] == "JP*GC.AP");
  CHECK(names[21] == "EU*GC.EU");
  CHECK(FeatureSpec::main_effects().width() == 19);

  CHECK(parse_predictor_list("EL, PFL,SIZE") ==
        std::vector<Predictor>{Predictor::EL, Predictor::PFL, Predictor::SIZE});
  CHECK(error_kind([] { parse_predictor_list("EL,XX"); }) == "UnknownPredictor");
  CHECK(parse_interaction_list("US:GC.US").at(0) == Interaction{Predictor::US, Predictor::GC_US});

  FeatureSpec dup;
  dup.predictors = {Predictor::EL, Predictor::EL};
  CHECK(error_kind([&] { dup.validate(); }) == "InvalidConfig");
  FeatureSpec orphan;
  orphan.predictors = {Predictor::EL};
  orphan.interactions = {{Predictor::US, Predictor::GC_US}};
  CHECK(error_kind([&] { orphan.validate(); }) == "InvalidConfig");
}

TEST_CASE("design matrix layout") {
  const auto data = small_dataset();
  const auto spec = FeatureSpec::full_linear();
  const auto dm = design_matrix(data, spec);
  CHECK(dm.X.rows() == 25);
  CHECK(dm.X.cols() == 22);
  CHECK(dm.columns == spec.column_names());
  for (Eigen::Index i = 0; i < dm.X.rows(); ++i) {
    const auto& r = data.records[static_cast<std::size_t>(i)];
    CHECK(dm.X(i, 0) == r[Predictor::EL]);
    CHECK(dm.X(i, 19) == r[Predictor::US] * r[Predictor::GC_US]);
    CHECK(dm.y[i] == r.spread / 10000.0);
    CHECK(design_row(r, spec) == dm.X.row(i).transpose());
  }
  auto bps = spec;
  bps.response_scale = ResponseScale::BasisPoints;
  CHECK(design_matrix(data, bps).y[3] == data.records[3].spread);

  Dataset partial = data;
  partial.feature_names = {"EL"};
  CHECK(error_kind([&] { design_matrix(partial, spec); }) == "UnknownPredictor");
}

TEST_CASE("subset and number formatting") {
  const auto data = small_dataset();
  const std::vector<std::size_t> rows{3, 0, 7};
  const auto s = subset(data, rows);
  CHECK(s.n() == 3);
  CHECK(s.records[0] == data.records[3]);
  CHECK(s.records[2] == data.records[7]);
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.0) == "0");
}
