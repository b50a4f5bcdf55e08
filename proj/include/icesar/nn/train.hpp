#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "icesar/data_model.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/nn/optim.hpp"

namespace icesar::nn {

/// Planes that can feed the network input, computed per sample.
enum class Channel { hh, hv, diff, mean, hh_smooth, hv_smooth, hh_gradient, hv_gradient, hh_laplacian, hv_laplacian };

std::string_view channel_name(Channel c);
Channel channel_from_name(std::string_view name);

struct ChannelRecipe {
  std::vector<Channel> channels{Channel::hh, Channel::hv, Channel::diff};
  bool incidence_normalize = true;  // applied to hh/hv before anything else
  double smooth_sigma = 1.0;        // for the *_smooth channels

  std::string to_string() const;  // comma-separated channel names
  static ChannelRecipe parse(std::string_view names, bool incidence_normalize = true);
  bool operator==(const ChannelRecipe&) const = default;
};

/// Per-channel affine standardization computed on training inputs.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 1 where a channel is constant

  static Standardization fit(const Tensor& inputs);
  void apply(Tensor& inputs) const;
  bool operator==(const Standardization&) const = default;
};

/// [N, C, H, W] input tensor for a sample set. Incidence normalization needs
/// every sample to carry an angle (impute first).
Tensor build_inputs(const SampleSet& set, const ChannelRecipe& recipe);

/// A trained network plus everything needed to prepare its inputs.
struct CnnModel {
  Network net;
  ChannelRecipe recipe;
  Standardization standardization;
  bool operator==(const CnnModel&) const = default;
};

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 32;
  double lr0 = 1e-3;
  int plateau_patience = 5;
  double plateau_factor = 0.1;
  double min_lr = 1e-6;
  AdamHyper adam{};
  std::uint64_t seed = 0;
  ChannelRecipe recipe{};

  void validate() const;
  PlateauConfig plateau() const { return {lr0, plateau_patience, plateau_factor, min_lr, 1e-6}; }
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0-based index of the restored epoch

  const EpochRecord& best() const { return epochs.at(best_epoch); }
  bool operator==(const History&) const = default;
};

struct FitResult {
  CnnModel model;
  History history;
};

/// Mini-batch Adam on logloss with a per-epoch seeded reshuffle and the
/// plateau schedule. Train loss/accuracy are running means over the epoch's
/// batches (dropout active); validation metrics use evaluation mode. Returns
/// the parameters of the epoch with the lowest validation loss.
FitResult fit(Network net, const SampleSet& train, const SampleSet& val, const TrainConfig& cfg);

/// Evaluation-mode probabilities, one per sample, in set order.
std::vector<double> predict_cnn(const CnnModel& model, const SampleSet& set, std::size_t batch_size = 64);
std::vector<double> predict_probabilities(const Network& net, const Tensor& inputs, std::size_t batch_size = 64);

struct PretrainConfig {
  int epochs = 30;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  AdamHyper adam{};
  std::uint64_t seed = 0;
  ChannelRecipe recipe{};
};

struct PretrainResult {
  CnnModel autoencoder;
  std::vector<double> epoch_mse;  // running mean reconstruction MSE per epoch
};

/// Trains a convolutional autoencoder to reconstruct standardized inputs.
/// Labels, when present, are ignored.
PretrainResult pretrain_autoencoder(Network ae, const SampleSet& data, const PretrainConfig& cfg);

/// Evaluation-mode reconstruction MSE over a whole set.
double reconstruction_mse(const CnnModel& ae, const SampleSet& set, std::size_t batch_size = 32);

void write_history_csv(std::ostream& out, const History& h);

}  // namespace icesar::nn
