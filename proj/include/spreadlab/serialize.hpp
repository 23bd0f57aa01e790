#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spreadlab/data.hpp"
#include "spreadlab/eval.hpp"
#include "spreadlab/gbm.hpp"
#include "spreadlab/interpret.hpp"
#include "spreadlab/interval.hpp"
#include "spreadlab/linreg.hpp"

namespace spreadlab::io {

using nlohmann::json;

inline constexpr std::string_view kModelFormat = "spreadlab-model";
inline constexpr int kModelVersion = 1;

json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const json& j);

/// Monotone constraints may be given as an array over features or as an
/// object keyed by feature name; interaction groups as lists of names.
json to_json(const gbm::Hyperparams& hp, const std::vector<std::string>& feature_names);
gbm::Hyperparams hyperparams_from_json(const json& j, const std::vector<std::string>& feature_names,
                                       gbm::Hyperparams defaults = {});

json to_json(const gbm::Ensemble& model);
gbm::Ensemble ensemble_from_json(const json& j);

json to_json(const LinearModel& model);
LinearModel linear_model_from_json(const json& j);

/// A fitted model plus the design layout it expects.
struct SavedModel {
  std::string kind;  // "gbm" or "linear"
  FeatureSpec spec;
  std::shared_ptr<const gbm::Ensemble> ensemble;
  std::shared_ptr<const LinearModel> linear;

  RegressorPtr regressor() const;
};

json to_json(const SavedModel& model);
SavedModel saved_model_from_json(const json& j);

void save_model(const SavedModel& model, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

json to_json(const PredictionInterval& pi);
PredictionInterval interval_from_json(const json& j);

json to_json(const eval::CVReport& report);
json to_json(const eval::GridResult& result, const std::vector<std::string>& feature_names);
json to_json(const interpret::ImportanceReport& report);
json to_json(const interpret::AleCurve& curve);
json to_json(const interpret::AleSurface& surface);
json to_json(const interpret::ConditionalCurve& curve);

/// Writes text and a trailing newline; throws Io.
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);

}  // namespace spreadlab::io
