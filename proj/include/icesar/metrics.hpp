#pragma once

#include <span>
#include <string>
#include <vector>

#include "icesar/data_model.hpp"

namespace icesar {

/// Iceberg probabilities keyed by sample id, in a fixed row order.
struct PredictionSet {
  std::vector<std::string> ids;
  std::vector<double> probs;

  std::size_t size() const { return ids.size(); }
  bool operator==(const PredictionSet&) const = default;
};

inline constexpr double kProbClamp = 1e-15;

/// Mean binary cross-entropy with p clamped to [1e-15, 1 - 1e-15].
double loss_logloss(std::span<const double> p, std::span<const int> y);

/// Labels of `labels` reordered to the ids of `preds`; throws DimensionError
/// when the id sets differ.
std::vector<int> aligned_labels(const PredictionSet& preds, const SampleSet& labels);

/// Ties (p == threshold) count as iceberg.
double metric_accuracy(std::span<const double> p, std::span<const int> y, double threshold = 0.5);
double metric_accuracy(const PredictionSet& preds, const SampleSet& labels, double threshold = 0.5);

struct ConfusionMatrix {
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;

  std::size_t total() const { return tn + fp + fn + tp; }
  double accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix metric_confusion(std::span<const double> p, std::span<const int> y, double threshold = 0.5);
ConfusionMatrix metric_confusion(const PredictionSet& preds, const SampleSet& labels, double threshold = 0.5);

}  // namespace icesar
