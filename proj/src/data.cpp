#include "spreadlab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "spreadlab/error.hpp"

namespace spreadlab {

namespace {

constexpr std::array<std::string_view, kNumPredictors> kNames = {
    "EL", "PFL", "SIZE", "TERM", "INDEM", "WIND",    "EQ",    "US",    "EU",   "JP",
    "SR", "IG",  "ROLX", "BBSPR", "GC.GLOB", "GC.US", "GC.AP", "GC.EU", "GC.UK"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view text, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + ", column " +
                                           std::string(column) + ": cannot parse '" +
                                           std::string(text) + "'");
  }
  return v;
}

void violation(std::size_t row, const std::string& what) {
  throw Error(ErrorKind::InvariantViolation, "row " + std::to_string(row) + ": " + what);
}

}  // namespace

const std::array<Predictor, kNumPredictors>& all_predictors() {
  static const std::array<Predictor, kNumPredictors> all = [] {
    std::array<Predictor, kNumPredictors> a{};
    for (std::size_t i = 0; i < kNumPredictors; ++i) a[i] = static_cast<Predictor>(i);
    return a;
  }();
  return all;
}

std::string_view name(Predictor p) { return kNames[index(p)]; }

std::optional<Predictor> parse_predictor(std::string_view text) {
  text = trim(text);
  for (std::size_t i = 0; i < kNumPredictors; ++i) {
    if (kNames[i] == text) return static_cast<Predictor>(i);
  }
  return std::nullopt;
}

bool is_binary(Predictor p) {
  switch (p) {
    case Predictor::INDEM:
    case Predictor::WIND:
    case Predictor::EQ:
    case Predictor::US:
    case Predictor::EU:
    case Predictor::JP:
    case Predictor::SR:
    case Predictor::IG:
      return true;
    default:
      return false;
  }
}

bool Dataset::has(Predictor p) const {
  return std::find(feature_names.begin(), feature_names.end(), name(p)) != feature_names.end();
}

FeatureSpec FeatureSpec::full_linear() {
  FeatureSpec spec = main_effects();
  spec.interactions = {{Predictor::US, Predictor::GC_US},
                       {Predictor::JP, Predictor::GC_AP},
                       {Predictor::EU, Predictor::GC_EU}};
  return spec;
}

FeatureSpec FeatureSpec::main_effects() {
  FeatureSpec spec;
  spec.predictors.assign(all_predictors().begin(), all_predictors().end());
  return spec;
}

void FeatureSpec::validate() const {
  std::set<Predictor> seen;
  for (auto p : predictors) {
    if (!seen.insert(p).second) {
      throw Error(ErrorKind::InvalidConfig, "duplicate predictor " + std::string(name(p)));
    }
  }
  std::set<Interaction> terms;
  for (const auto& term : interactions) {
    if (!seen.count(term.first) || !seen.count(term.second)) {
      throw Error(ErrorKind::InvalidConfig,
                  "interaction " + interaction_name(term) + " references an excluded predictor");
    }
    if (!terms.insert(term).second) {
      throw Error(ErrorKind::InvalidConfig, "duplicate interaction " + interaction_name(term));
    }
  }
}

std::vector<std::string> FeatureSpec::column_names() const {
  std::vector<std::string> out;
  out.reserve(width());
  for (auto p : predictors) out.emplace_back(name(p));
  for (const auto& term : interactions) out.push_back(interaction_name(term));
  return out;
}

std::vector<Predictor> FeatureSpec::required() const {
  std::vector<Predictor> out = predictors;
  for (const auto& [a, b] : interactions) {
    for (auto p : {a, b}) {
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }
  return out;
}

std::string interaction_name(const Interaction& term) {
  return std::string(name(term.first)) + "*" + std::string(name(term.second));
}

std::vector<Predictor> parse_predictor_list(std::string_view csv) {
  std::vector<Predictor> out;
  for (auto tok : split(csv, ',')) {
    if (tok.empty()) continue;
    auto p = parse_predictor(tok);
    if (!p) throw Error(ErrorKind::UnknownPredictor, std::string(tok));
    out.push_back(*p);
  }
  return out;
}

std::vector<Interaction> parse_interaction_list(std::string_view csv) {
  std::vector<Interaction> out;
  for (auto tok : split(csv, ',')) {
    if (tok.empty()) continue;
    auto parts = split(tok, ':');
    if (parts.size() != 2) parts = split(tok, '*');
    if (parts.size() != 2) {
      throw Error(ErrorKind::InvalidConfig, "interaction must look like A:B, got " + std::string(tok));
    }
    auto a = parse_predictor(parts[0]);
    auto b = parse_predictor(parts[1]);
    if (!a) throw Error(ErrorKind::UnknownPredictor, std::string(parts[0]));
    if (!b) throw Error(ErrorKind::UnknownPredictor, std::string(parts[1]));
    out.emplace_back(*a, *b);
  }
  return out;
}

void validate_record(const BondRecord& r, std::size_t row) {
  if (!std::isfinite(r.spread)) violation(row, "spread is not finite");
  for (auto p : all_predictors()) {
    if (!std::isfinite(r[p])) violation(row, std::string(name(p)) + " is not finite");
  }
  if (!(r.spread > 0.0)) violation(row, "spread > 0");
  if (!(r[Predictor::EL] >= 0.0)) violation(row, "el >= 0");
  if (!(r[Predictor::PFL] >= 0.0)) violation(row, "pfl >= 0");
  if (!(r[Predictor::SIZE] > 0.0)) violation(row, "size > 0");
  if (!(r[Predictor::TERM] > 0.0)) violation(row, "term > 0");
  for (auto p : all_predictors()) {
    if (is_binary(p) && r[p] != 0.0 && r[p] != 1.0) {
      violation(row, std::string(name(p)) + " must be 0 or 1");
    }
  }
  if (r[Predictor::US] + r[Predictor::EU] + r[Predictor::JP] > 1.0) {
    violation(row, "at most one of US, EU, JP may be 1");
  }
  if (r[Predictor::WIND] + r[Predictor::EQ] > 1.0) {
    violation(row, "at most one of WIND, EQ may be 1");
  }
}

Dataset read_csv(std::istream& in, const FeatureSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::InvariantViolation, "n >= 1 (file has no header)");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line, ',');

  auto find_column = [&](std::string_view col) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col) return i;
    }
    return std::nullopt;
  };

  const auto spread_col = find_column(kSpreadColumn);
  if (!spread_col) throw Error(ErrorKind::MissingColumn, std::string(kSpreadColumn));
  for (auto p : spec.required()) {
    if (!find_column(name(p))) throw Error(ErrorKind::MissingColumn, std::string(name(p)));
  }

  Dataset data;
  std::array<std::optional<std::size_t>, kNumPredictors> columns{};
  for (auto p : all_predictors()) {
    columns[index(p)] = find_column(name(p));
    if (columns[index(p)]) data.feature_names.emplace_back(name(p));
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() < header.size()) {
      throw Error(ErrorKind::ParseError,
                  "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    }
    BondRecord rec;
    rec.spread = parse_number(cells[*spread_col], row, kSpreadColumn);
    for (auto p : all_predictors()) {
      if (const auto& c = columns[index(p)]) rec[p] = parse_number(cells[*c], row, name(p));
    }
    validate_record(rec, row);
    data.records.push_back(rec);
  }
  if (data.records.empty()) throw Error(ErrorKind::InvariantViolation, "n >= 1");
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_csv(in, spec);
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& data, std::ostream& out) {
  std::vector<Predictor> cols;
  for (auto p : all_predictors()) {
    if (data.has(p)) cols.push_back(p);
  }
  out << kSpreadColumn;
  for (auto p : cols) out << ',' << name(p);
  out << '\n';
  for (const auto& r : data.records) {
    out << format_double(r.spread);
    for (auto p : cols) out << ',' << format_double(r[p]);
    out << '\n';
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_csv(data, out);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

double response_value(const BondRecord& record, ResponseScale scale) {
  return scale == ResponseScale::Decimal ? record.spread / kBpsPerUnit : record.spread;
}

Eigen::VectorXd design_row(const BondRecord& record, const FeatureSpec& spec) {
  Eigen::VectorXd row(static_cast<Eigen::Index>(spec.width()));
  Eigen::Index j = 0;
  for (auto p : spec.predictors) row[j++] = record[p];
  for (const auto& [a, b] : spec.interactions) row[j++] = record[a] * record[b];
  return row;
}

DesignMatrix design_matrix(const Dataset& data, const FeatureSpec& spec) {
  for (auto p : spec.required()) {
    if (!data.has(p)) throw Error(ErrorKind::UnknownPredictor, std::string(name(p)));
  }
  DesignMatrix dm;
  const auto n = static_cast<Eigen::Index>(data.n());
  dm.X.resize(n, static_cast<Eigen::Index>(spec.width()));
  dm.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = data.records[static_cast<std::size_t>(i)];
    dm.X.row(i) = design_row(rec, spec).transpose();
    dm.y[i] = response_value(rec, spec.response_scale);
  }
  dm.columns = spec.column_names();
  return dm;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.feature_names = data.feature_names;
  out.records.reserve(rows.size());
  for (auto r : rows) out.records.push_back(data.records.at(r));
  return out;
}

}  // namespace spreadlab
