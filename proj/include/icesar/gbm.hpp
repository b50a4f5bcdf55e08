#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icesar {

using FeatureRows = std::vector<std::vector<double>>;

/// One node of a regression tree. Internal nodes route x[feature] <= threshold
/// to `left`; leaves carry a logit increment in `value`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat node array; node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct GbmParams {
  int n_trees = 200;
  int max_depth = 3;
  double shrinkage = 0.1;
  std::size_t min_samples_leaf = 5;
  std::uint64_t seed = 0;  // fitting is deterministic; kept for config echo

  void validate() const;
};

struct GbmModel {
  static constexpr int kFormatVersion = 1;

  double base_score = 0.0;  // logit
  std::vector<Tree> trees;
  double shrinkage = 0.1;
  std::size_t feature_count = 0;

  bool operator==(const GbmModel&) const = default;
};

/// Per-round diagnostics from fit_gbm.
struct GbmTrace {
  std::vector<double> train_logloss;  // entry k: after k trees (entry 0: base score only)
  std::vector<double> train_probabilities;
};

GbmModel fit_gbm(const FeatureRows& x, std::span<const int> y, const GbmParams& params,
                 GbmTrace* trace = nullptr);

std::vector<double> predict_gbm(const GbmModel& m, const FeatureRows& x);
double predict_gbm_row(const GbmModel& m, std::span<const double> x);

std::string serialize_gbm(const GbmModel& m);
GbmModel deserialize_gbm(std::string_view bytes);

/// Best single split of `residuals` over the listed rows, chosen by minimum
/// residual sum of squares. Exposed for tests.
struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // SSE reduction
};

SplitChoice best_split(const FeatureRows& x, std::span<const double> residuals, std::span<const std::size_t> rows,
                       std::size_t min_samples_leaf);

}  // namespace icesar
