#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace spreadlab {

/// The nineteen bond and market predictors, in glossary order.
enum class Predictor : std::uint8_t {
  EL,
  PFL,
  SIZE,
  TERM,
  INDEM,
  WIND,
  EQ,
  US,
  EU,
  JP,
  SR,
  IG,
  ROLX,
  BBSPR,
  GC_GLOB,
  GC_US,
  GC_AP,
  GC_EU,
  GC_UK,
};

inline constexpr std::size_t kNumPredictors = 19;
inline constexpr std::string_view kSpreadColumn = "SPREAD";
inline constexpr double kBpsPerUnit = 10000.0;

const std::array<Predictor, kNumPredictors>& all_predictors();
std::string_view name(Predictor p);
std::optional<Predictor> parse_predictor(std::string_view text);
bool is_binary(Predictor p);
constexpr std::size_t index(Predictor p) { return static_cast<std::size_t>(p); }

/// One primary-market transaction. Spread is quoted in basis points; EL and
/// PFL in percentage points; SIZE in USD millions; TERM in months.
struct BondRecord {
  double spread = 0.0;
  std::array<double, kNumPredictors> x{};

  double& operator[](Predictor p) { return x[index(p)]; }
  double operator[](Predictor p) const { return x[index(p)]; }

  friend bool operator==(const BondRecord&, const BondRecord&) = default;
};

struct Dataset {
  std::vector<BondRecord> records;
  /// Predictor columns that were present in the source, glossary order.
  std::vector<std::string> feature_names;

  std::size_t n() const { return records.size(); }
  bool has(Predictor p) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class ResponseScale { Decimal, BasisPoints };

using Interaction = std::pair<Predictor, Predictor>;

struct FeatureSpec {
  std::vector<Predictor> predictors;
  std::vector<Interaction> interactions;
  ResponseScale response_scale = ResponseScale::Decimal;

  /// 19 main effects plus US*GC.US, JP*GC.AP and EU*GC.EU.
  static FeatureSpec full_linear();
  /// 19 main effects, no interactions (tree models find their own).
  static FeatureSpec main_effects();

  /// Throws InvalidConfig on duplicates or interactions with excluded parents.
  void validate() const;
  std::size_t width() const { return predictors.size() + interactions.size(); }
  std::vector<std::string> column_names() const;
  /// Predictors the spec reads, including interaction parents.
  std::vector<Predictor> required() const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Parses "EL,PFL,SIZE" style lists; throws UnknownPredictor.
std::vector<Predictor> parse_predictor_list(std::string_view csv);
/// Parses "US:GC.US,JP:GC.AP" style lists.
std::vector<Interaction> parse_interaction_list(std::string_view csv);
std::string interaction_name(const Interaction& term);

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> columns;
};

/// Throws InvariantViolation naming the violated rule. `row` is 1-based.
void validate_record(const BondRecord& record, std::size_t row);

Dataset read_csv(std::istream& in, const FeatureSpec& spec);
Dataset load_csv(const std::filesystem::path& path, const FeatureSpec& spec);
void write_csv(const Dataset& data, std::ostream& out);
void save_csv(const Dataset& data, const std::filesystem::path& path);

DesignMatrix design_matrix(const Dataset& data, const FeatureSpec& spec);
/// One design row for a record, laid out exactly like design_matrix.
Eigen::VectorXd design_row(const BondRecord& record, const FeatureSpec& spec);
double response_value(const BondRecord& record, ResponseScale scale);

Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace spreadlab
