#include "icesar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "icesar/errors.hpp"

namespace icesar {

double loss_logloss(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw DimensionError("logloss: prediction and label counts differ");
  if (p.empty()) throw InvalidArgument("logloss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    sum += y[i] == 1 ? std::log(q) : std::log1p(-q);
  }
  return -sum / static_cast<double>(p.size());
}

std::vector<int> aligned_labels(const PredictionSet& preds, const SampleSet& labels) {
  if (preds.ids.size() != preds.probs.size()) throw DimensionError("prediction set: ids and probs differ in length");
  if (preds.size() != labels.size()) throw DimensionError("prediction and label id sets differ");
  std::unordered_map<std::string, int> by_id;
  for (const auto& s : labels.samples()) {
    if (!s.label) throw LabelError("sample " + s.id + " is unlabeled");
    by_id.emplace(s.id, static_cast<int>(*s.label));
  }
  std::vector<int> y;
  y.reserve(preds.size());
  for (const auto& id : preds.ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DimensionError("no label for prediction id " + id);
    y.push_back(it->second);
  }
  return y;
}

ConfusionMatrix metric_confusion(std::span<const double> p, std::span<const int> y, double threshold) {
  if (p.size() != y.size()) throw DimensionError("confusion: prediction and label counts differ");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool positive = p[i] >= threshold;
    if (y[i] == 1) {
      (positive ? m.tp : m.fn)++;
    } else {
      (positive ? m.fp : m.tn)++;
    }
  }
  return m;
}

double metric_accuracy(std::span<const double> p, std::span<const int> y, double threshold) {
  if (p.size() != y.size()) throw DimensionError("accuracy: prediction and label counts differ");
  if (p.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hits += static_cast<std::size_t>((p[i] >= threshold) == (y[i] == 1));
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

double metric_accuracy(const PredictionSet& preds, const SampleSet& labels, double threshold) {
  const auto y = aligned_labels(preds, labels);
  return metric_accuracy(preds.probs, y, threshold);
}

ConfusionMatrix metric_confusion(const PredictionSet& preds, const SampleSet& labels, double threshold) {
  const auto y = aligned_labels(preds, labels);
  return metric_confusion(preds.probs, y, threshold);
}

}  // namespace icesar
