#pragma once

// Axis-aligned CART trees shared by the forest and the boosting learners.
// Splits are searched over presorted per-feature index lists that are stably
// partitioned as the tree grows, so one level costs O(n * features).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lsds/error.hpp"
#include "lsds/rng.hpp"

namespace lsds {

// Dense row-major sample matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;   // leaf output (positive fraction or regression value)
  double weight = 0.0;  // training weight that reached the node

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const TreeNode& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
  }

  double predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }

  // Longest root-to-leaf path, in edges.
  std::size_t depth() const {
    if (nodes_.empty()) return 0;
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      const TreeNode& n = nodes_[i];
      if (n.is_leaf()) {
        best = std::max(best, d);
      } else {
        stack.push_back({static_cast<std::size_t>(n.left), d + 1});
        stack.push_back({static_cast<std::size_t>(n.right), d + 1});
      }
    }
    return best;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::vector<TreeNode>& nodes() noexcept { return nodes_; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

enum class SplitCriterion { Gini, SquaredError };

struct TreeGrowParams {
  std::size_t max_depth = 20;
  std::size_t max_features = 0;  // 0 or >= cols: all features
  double min_samples_leaf = 1.0;
  double min_samples_split = 2.0;
  SplitCriterion criterion = SplitCriterion::Gini;
};

struct GrownTree {
  DecisionTree tree;
  std::vector<std::int32_t> leaf_of;  // leaf node per sample, -1 for zero-weight samples
};

namespace detail {

struct NodeStats {
  double w = 0.0;   // sum of weights
  double s = 0.0;   // sum of w*y
  double q = 0.0;   // sum of w*y^2
};

inline double impurity(const NodeStats& st, SplitCriterion c) {
  if (st.w <= 0.0) return 0.0;
  if (c == SplitCriterion::Gini) {
    // Weighted Gini: W * (1 - p^2 - (1-p)^2) with p = S/W.
    return 2.0 * st.s * (st.w - st.s) / st.w;
  }
  return std::max(0.0, st.q - st.s * st.s / st.w);
}

}  // namespace detail

// Grows one tree on column-major data (`columns[f][i]`) with per-sample weights
// and targets. Gini expects targets in {0,1}; the leaf value is then the
// weighted positive fraction. SquaredError leaves hold the weighted mean.
inline GrownTree grow_tree(const std::vector<std::vector<double>>& columns, std::span<const double> y,
                           std::span<const double> weights, const TreeGrowParams& p, Rng& rng) {
  const std::size_t nfeat = columns.size();
  const std::size_t n = y.size();
  if (nfeat == 0) throw TrainingError("tree needs at least one feature");
  const std::size_t mtry = (p.max_features == 0 || p.max_features > nfeat) ? nfeat : p.max_features;

  std::vector<std::uint32_t> active;
  active.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) active.push_back(static_cast<std::uint32_t>(i));
  }
  if (active.empty()) throw TrainingError("no samples with positive weight");

  // order[f] holds the active ids sorted by feature f; every node owns the same
  // [begin, end) slice in each list.
  std::vector<std::vector<std::uint32_t>> order(nfeat, active);
  for (std::size_t f = 0; f < nfeat; ++f) {
    const auto& col = columns[f];
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }

  GrownTree out;
  out.leaf_of.assign(n, -1);
  std::vector<TreeNode>& nodes = out.tree.nodes();
  std::vector<char> goes_left(n, 0);
  std::vector<std::uint32_t> scratch;
  std::vector<std::size_t> feature_ids(nfeat);

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
    std::size_t depth;
  };
  nodes.emplace_back();
  std::vector<Pending> stack{{0, 0, active.size(), 0}};

  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();

    detail::NodeStats total;
    for (std::size_t k = cur.begin; k < cur.end; ++k) {
      const std::uint32_t id = order[0][k];
      total.w += weights[id];
      total.s += weights[id] * y[id];
      total.q += weights[id] * y[id] * y[id];
    }
    const double parent_imp = detail::impurity(total, p.criterion);
    nodes[cur.node].weight = total.w;
    nodes[cur.node].value = total.s / total.w;

    bool split_found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    double best_gain = -std::numeric_limits<double>::infinity();

    const bool can_split = cur.depth < p.max_depth && total.w >= p.min_samples_split &&
                           total.w >= 2.0 * p.min_samples_leaf && parent_imp > 1e-12 * std::max(1.0, total.w);
    if (can_split) {
      std::iota(feature_ids.begin(), feature_ids.end(), std::size_t{0});
      // Visit features in random order until mtry non-constant ones were scanned.
      std::size_t visited = 0;
      for (std::size_t k = 0; k < nfeat && visited < mtry; ++k) {
        const std::size_t j = k + uniform_index(rng, nfeat - k);
        std::swap(feature_ids[k], feature_ids[j]);
        const std::size_t f = feature_ids[k];
        const auto& col = columns[f];
        const auto& ord = order[f];
        if (col[ord[cur.begin]] >= col[ord[cur.end - 1]]) continue;  // constant in this node
        ++visited;

        detail::NodeStats left;
        for (std::size_t t = cur.begin; t + 1 < cur.end; ++t) {
          const std::uint32_t id = ord[t];
          left.w += weights[id];
          left.s += weights[id] * y[id];
          left.q += weights[id] * y[id] * y[id];
          const double xa = col[id];
          const double xb = col[ord[t + 1]];
          if (!(xa < xb)) continue;
          const double right_w = total.w - left.w;
          if (left.w < p.min_samples_leaf || right_w < p.min_samples_leaf) continue;
          const detail::NodeStats right{right_w, total.s - left.s, total.q - left.q};
          const double gain =
              parent_imp - detail::impurity(left, p.criterion) - detail::impurity(right, p.criterion);
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
            double thr = xa + (xb - xa) / 2.0;
            if (!(thr < xb)) thr = xa;
            best_threshold = thr;
            split_found = true;
          }
        }
      }
      // Zero-gain splits are allowed (needed for XOR-like data); numerically
      // negative ones are not.
      if (split_found && best_gain < -1e-9 * std::max(1.0, parent_imp)) split_found = false;
    }

    if (!split_found) {
      for (std::size_t k = cur.begin; k < cur.end; ++k) {
        out.leaf_of[order[0][k]] = static_cast<std::int32_t>(cur.node);
      }
      continue;
    }

    const auto& split_col = columns[best_feature];
    std::size_t n_left = 0;
    for (std::size_t k = cur.begin; k < cur.end; ++k) {
      const std::uint32_t id = order[0][k];
      goes_left[id] = split_col[id] <= best_threshold ? 1 : 0;
      n_left += goes_left[id];
    }
    for (std::size_t f = 0; f < nfeat; ++f) {
      auto& ord = order[f];
      scratch.clear();
      std::size_t w = cur.begin;
      for (std::size_t k = cur.begin; k < cur.end; ++k) {
        if (goes_left[ord[k]]) {
          ord[w++] = ord[k];
        } else {
          scratch.push_back(ord[k]);
        }
      }
      std::copy(scratch.begin(), scratch.end(), ord.begin() + static_cast<std::ptrdiff_t>(w));
    }

    const std::size_t left_id = nodes.size();
    nodes.emplace_back();
    const std::size_t right_id = nodes.size();
    nodes.emplace_back();
    TreeNode& node = nodes[cur.node];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = static_cast<std::int32_t>(left_id);
    node.right = static_cast<std::int32_t>(right_id);
    const std::size_t mid = cur.begin + n_left;
    stack.push_back({right_id, mid, cur.end, cur.depth + 1});
    stack.push_back({left_id, cur.begin, mid, cur.depth + 1});
  }
  return out;
}

inline std::vector<std::vector<double>> to_columns(const FeatureMatrix& x) {
  std::vector<std::vector<double>> cols(x.cols, std::vector<double>(x.rows));
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) cols[j][i] = x(i, j);
  }
  return cols;
}

}  // namespace lsds
