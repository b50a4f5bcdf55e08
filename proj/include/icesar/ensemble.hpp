#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icesar/data_model.hpp"
#include "icesar/gbm.hpp"
#include "icesar/metrics.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/nn/train.hpp"

namespace icesar {

/// A base model for stacking: trains on `train` and returns one iceberg
/// probability per sample of `predict`, in order.
struct Member {
  std::string name;
  std::function<std::vector<double>(const SampleSet& train, const SampleSet& predict)> fit_predict;
};

/// GBM on the 30-feature vectors; missing angles take the training mean.
Member gbm_member(const GbmParams& params, std::string name = "gbm");

struct CnnMemberConfig {
  nn::TrainConfig train{};
  nn::ArchSpec arch{};  // input_ch must match the recipe
  double val_ratio = 0.2;  // inner split of the training fold for model selection
};

/// Reference CNN; the training fold is split again for best-epoch selection.
Member cnn_member(const CnnMemberConfig& cfg, std::string name = "cnn");

/// Out-of-fold probabilities, one column per member. Entries are the members'
/// raw outputs; the stacker clamps before taking logits.
struct OofMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> members;
  std::vector<std::vector<double>> columns;  // [member][row]
  std::vector<int> fold;
  std::vector<int> labels;

  std::size_t rows() const { return ids.size(); }
  PredictionSet column(std::size_t m) const { return {ids, columns.at(m)}; }
};

/// Stratified fold index per row: each class is shuffled with `seed` and dealt
/// round-robin, continuing where the previous class stopped.
std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed);

/// Throws LabelError when a held-out fold lacks a class.
OofMatrix oof_predictions(const SampleSet& set, std::span<const Member> members, int k, std::uint64_t seed);

/// Logistic combiner over clamped member logits.
struct Stacker {
  std::vector<double> weights;
  double bias = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct StackerOptions {
  int max_iterations = 10000;
  double tolerance = 1e-8;  // on the gradient norm
};

double logit_clamped(double p);

/// Damped Newton on the mean logloss, from zero weights and bias.
Stacker fit_stacker(const OofMatrix& oof, std::span<const int> y, const StackerOptions& opts = {});
Stacker fit_stacker(const std::vector<std::vector<double>>& columns, std::span<const int> y,
                    const StackerOptions& opts = {});

std::vector<double> predict_stacker(const Stacker& s, const std::vector<std::vector<double>>& columns);
/// Member predictions must share ids in the same order.
PredictionSet predict_stacker(const Stacker& s, std::span<const PredictionSet> member_preds);

enum class BlendMode { mean, logit_mean, weights };
BlendMode blend_mode_from_name(std::string_view name);

/// `weights` is used only by BlendMode::weights: nonnegative, summing to 1.
PredictionSet blend(std::span<const PredictionSet> preds, BlendMode mode, std::span<const double> weights = {});

void write_oof_csv(std::ostream& out, const OofMatrix& oof);
OofMatrix read_oof_csv(std::istream& in);
std::string serialize_stacker(const Stacker& s, std::span<const std::string> members = {});
Stacker deserialize_stacker(std::string_view bytes);

}  // namespace icesar
