#pragma once

// Level-wise exact split search. For every candidate feature the active rows
// are kept sorted by value inside contiguous per-node segments, so one pass
// over a feature column evaluates every node of the current level. The serial
// and OpenMP paths share best_splits_for_feature and merge per-feature winners
// in feature order, so both return the same splits bit for bit.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "spreadlab/gbm.hpp"
#include "spreadlab/parallel.hpp"

namespace spreadlab::gbm::detail {

struct NodeState {
  double G = 0.0;
  double H = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double weight = 0.0;
};

struct SplitCandidate {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  double GL = 0.0;
  double HL = 0.0;
  double wL = 0.0;
  double wR = 0.0;
};

struct LevelContext {
  std::span<const double> g;
  std::span<const double> h;
  /// One state per segment.
  std::span<const NodeState> slots;
  /// segments x n_features flags: may segment s split on feature f.
  std::span<const std::uint8_t> allowed;
  std::span<const int> monotone;
  double lambda = 0.0;
  double min_child_weight = 0.0;
};

/// -G / (H + lambda), clamped to the node's admissible range.
double leaf_weight(double G, double H, double lambda, double lower, double upper);

class NodePartition {
 public:
  /// One root segment holding `rows`, for each of `features` (sorted, unique).
  NodePartition(const SortedColumns& sorted, std::span<const std::size_t> rows,
                std::span<const std::size_t> features);

  std::size_t n_segments() const { return bounds_.size() - 1; }
  std::size_t n_total_features() const { return n_total_features_; }
  std::span<const std::size_t> features() const { return features_; }

  /// Best boundary of features()[k] for every segment.
  std::vector<SplitCandidate> best_splits_for_feature(const LevelContext& ctx, std::size_t k) const;

  std::vector<SplitCandidate> find_best_splits(const LevelContext& ctx, ExecutionPolicy policy) const;

  /// Replaces every segment flagged in `split` by its left and right parts
  /// (rows with go_left[row] != 0 first) and drops the others. Order inside
  /// each part is preserved.
  void split(std::span<const std::uint8_t> split, std::span<const std::uint8_t> go_left, ExecutionPolicy policy);

 private:
  std::size_t n_total_features_;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> bounds_;
  std::size_t capacity_ = 0;
  // Per feature: current row order and values, plus a second buffer the
  // partition step writes into before the two are swapped.
  std::vector<std::unique_ptr<std::uint32_t[]>> rows_;
  std::vector<std::unique_ptr<double[]>> values_;
  std::vector<std::unique_ptr<std::uint32_t[]>> scratch_rows_;
  std::vector<std::unique_ptr<double[]>> scratch_values_;
};

}  // namespace spreadlab::gbm::detail
