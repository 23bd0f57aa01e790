#include <algorithm>
#include <cmath>

#include "spreadlab/detail/split_kernel.hpp"

namespace spreadlab::gbm::detail {

namespace {

// Objective reduction of a node when its weight is w: -(2 G w + (H + lambda) w^2).
// Equals G^2 / (H + lambda) at the unconstrained optimum.
double score_given_weight(double G, double H, double lambda, double w) {
  return -(2.0 * G * w + (H + lambda) * w * w);
}

double score(double G, double H, double lambda) {
  const double denom = H + lambda;
  return denom > 0.0 ? G * G / denom : 0.0;
}

double midpoint(double a, double b) {
  const double t = a / 2.0 + b / 2.0;
  return t > a ? t : b;
}

void scan_plain(const LevelContext& ctx, const NodeState& node, const std::uint32_t* rows, const double* values,
                std::size_t m, int feature, SplitCandidate& best) {
  const double parent = score(node.G, node.H, ctx.lambda);
  const double mcw = ctx.min_child_weight;
  const double lambda = ctx.lambda;
  double GL = 0.0;
  double HL = 0.0;
  double best_gain = best.gain;
  std::size_t best_k = m;
  double best_GL = 0.0;
  double best_HL = 0.0;
  const double* g = ctx.g.data();
  const double* h = ctx.h.data();
  const double G = node.G;
  const double H = node.H;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const auto row = rows[k];
    GL += g[row];
    HL += h[row];
    if (values[k] == values[k + 1]) continue;
    const double HR = H - HL;
    if (HL < mcw || HR < mcw) continue;
    const double GR = G - GL;
    const double gain = 0.5 * (score(GL, HL, lambda) + score(GR, HR, lambda) - parent);
    if (gain > best_gain) {
      best_gain = gain;
      best_k = k;
      best_GL = GL;
      best_HL = HL;
    }
  }
  if (best_k == m) return;
  best.valid = true;
  best.gain = best_gain;
  best.feature = feature;
  best.threshold = midpoint(values[best_k], values[best_k + 1]);
  best.GL = best_GL;
  best.HL = best_HL;
  best.wL = leaf_weight(best_GL, best_HL, lambda, node.lower, node.upper);
  best.wR = leaf_weight(node.G - best_GL, node.H - best_HL, lambda, node.lower, node.upper);
}

void scan_constrained(const LevelContext& ctx, const NodeState& node, const std::uint32_t* rows,
                      const double* values, std::size_t m, int feature, int direction, SplitCandidate& best) {
  const double lambda = ctx.lambda;
  const double parent = score_given_weight(node.G, node.H, lambda, node.weight);
  double GL = 0.0;
  double HL = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const auto row = rows[k];
    GL += ctx.g[row];
    HL += ctx.h[row];
    if (values[k] == values[k + 1]) continue;
    const double HR = node.H - HL;
    if (HL < ctx.min_child_weight || HR < ctx.min_child_weight) continue;
    const double GR = node.G - GL;
    const double wL = leaf_weight(GL, HL, lambda, node.lower, node.upper);
    const double wR = leaf_weight(GR, HR, lambda, node.lower, node.upper);
    if (direction > 0 && wL > wR) continue;
    if (direction < 0 && wL < wR) continue;
    const double gain =
        0.5 * (score_given_weight(GL, HL, lambda, wL) + score_given_weight(GR, HR, lambda, wR) - parent);
    if (gain > best.gain) {
      best.valid = true;
      best.gain = gain;
      best.feature = feature;
      best.threshold = midpoint(values[k], values[k + 1]);
      best.GL = GL;
      best.HL = HL;
      best.wL = wL;
      best.wR = wR;
    }
  }
}

}  // namespace

double leaf_weight(double G, double H, double lambda, double lower, double upper) {
  const double denom = H + lambda;
  double w = (G == 0.0 || denom <= 0.0) ? 0.0 : -G / denom;
  return std::clamp(w, lower, upper);
}

NodePartition::NodePartition(const SortedColumns& sorted, std::span<const std::size_t> rows,
                             std::span<const std::size_t> features)
    : n_total_features_(sorted.n_features()), features_(features.begin(), features.end()) {
  const std::size_t n = sorted.n_features() == 0 ? 0 : sorted.order(0).size();
  const bool all = rows.size() == n;
  std::vector<std::uint8_t> member;
  if (!all) {
    member.assign(n, 0);
    for (auto r : rows) member[r] = 1;
  }
  bounds_ = {0, static_cast<std::uint32_t>(rows.size())};
  // One spare slot absorbs the write past the last member below.
  capacity_ = rows.size() + 1;
  const std::size_t nf = features_.size();
  rows_.resize(nf);
  values_.resize(nf);
  scratch_rows_.resize(nf);
  scratch_values_.resize(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    rows_[k] = std::make_unique_for_overwrite<std::uint32_t[]>(capacity_);
    values_[k] = std::make_unique_for_overwrite<double[]>(capacity_);
    scratch_rows_[k] = std::make_unique_for_overwrite<std::uint32_t[]>(capacity_);
    scratch_values_[k] = std::make_unique_for_overwrite<double[]>(capacity_);
    const auto order = sorted.order(features_[k]);
    const auto values = sorted.values(features_[k]);
    std::uint32_t* r = rows_[k].get();
    double* v = values_[k].get();
    if (all) {
      std::copy(order.begin(), order.end(), r);
      std::copy(values.begin(), values.end(), v);
      continue;
    }
    std::size_t at = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      r[at] = order[i];
      v[at] = values[i];
      at += member[order[i]];
    }
  }
}

std::vector<SplitCandidate> NodePartition::best_splits_for_feature(const LevelContext& ctx, std::size_t k) const {
  const std::size_t n_seg = n_segments();
  const std::size_t feature = features_[k];
  const int direction = ctx.monotone.empty() ? 0 : ctx.monotone[feature];
  const int f = static_cast<int>(feature);
  std::vector<SplitCandidate> best(n_seg);
  for (std::size_t s = 0; s < n_seg; ++s) {
    if (!ctx.allowed[s * n_total_features_ + feature]) continue;
    const NodeState& node = ctx.slots[s];
    const std::uint32_t* rows = rows_[k].get() + bounds_[s];
    const double* values = values_[k].get() + bounds_[s];
    const std::size_t m = bounds_[s + 1] - bounds_[s];
    if (direction == 0 && !std::isfinite(node.lower) && !std::isfinite(node.upper)) {
      scan_plain(ctx, node, rows, values, m, f, best[s]);
    } else {
      scan_constrained(ctx, node, rows, values, m, f, direction, best[s]);
    }
  }
  return best;
}

std::vector<SplitCandidate> NodePartition::find_best_splits(const LevelContext& ctx, ExecutionPolicy policy) const {
  const std::size_t n_seg = n_segments();
  std::vector<std::vector<SplitCandidate>> per_feature(features_.size());
  parallel_for(policy, static_cast<std::ptrdiff_t>(features_.size()), [&](std::ptrdiff_t k) {
    per_feature[static_cast<std::size_t>(k)] = best_splits_for_feature(ctx, static_cast<std::size_t>(k));
  });

  // Features are visited in ascending index order; a strictly larger gain is
  // required to displace an earlier winner.
  std::vector<SplitCandidate> best(n_seg);
  for (const auto& cands : per_feature) {
    for (std::size_t s = 0; s < n_seg; ++s) {
      if (cands[s].valid && cands[s].gain > best[s].gain) best[s] = cands[s];
    }
  }
  return best;
}

void NodePartition::split(std::span<const std::uint8_t> split, std::span<const std::uint8_t> go_left,
                          ExecutionPolicy policy) {
  const std::size_t n_seg = n_segments();
  // Child sizes are the same for every feature; count them on the first.
  std::vector<std::uint32_t> next_bounds{0};
  if (!features_.empty()) {
    const std::uint32_t* r0 = rows_[0].get();
    for (std::size_t s = 0; s < n_seg; ++s) {
      if (!split[s]) continue;
      std::uint32_t left = 0;
      for (auto i = bounds_[s]; i < bounds_[s + 1]; ++i) left += go_left[r0[i]] != 0;
      next_bounds.push_back(next_bounds.back() + left);
      next_bounds.push_back(next_bounds.back() + (bounds_[s + 1] - bounds_[s] - left));
    }
  }

  parallel_for(policy, static_cast<std::ptrdiff_t>(features_.size()), [&](std::ptrdiff_t kk) {
    const auto k = static_cast<std::size_t>(kk);
    std::uint32_t* rows = scratch_rows_[k].get();
    double* values = scratch_values_[k].get();
    const std::uint32_t* src_rows = rows_[k].get();
    const double* src_values = values_[k].get();
    std::size_t child = 0;
    for (std::size_t s = 0; s < n_seg; ++s) {
      if (!split[s]) continue;
      std::uint32_t l = next_bounds[child];
      std::uint32_t r = next_bounds[child + 1];
      for (auto i = bounds_[s]; i < bounds_[s + 1]; ++i) {
        const auto row = src_rows[i];
        const std::uint32_t left = go_left[row];
        const std::uint32_t at = left ? l : r;
        rows[at] = row;
        values[at] = src_values[i];
        l += left;
        r += 1 - left;
      }
      child += 2;
    }
    rows_[k].swap(scratch_rows_[k]);
    values_[k].swap(scratch_values_[k]);
  });
  bounds_ = std::move(next_bounds);
}

}  // namespace spreadlab::gbm::detail
