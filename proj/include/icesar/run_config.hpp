#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icesar/data_model.hpp"
#include "icesar/gbm.hpp"
#include "icesar/harness.hpp"
#include "icesar/image_ops.hpp"
#include "icesar/nn/train.hpp"

namespace icesar {

/// All run parameters as one JSON document. Loading a file or applying an
/// override only replaces keys that already exist in the defaults, so typos
/// fail loudly instead of being ignored.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::string& path);
  void merge(const nlohmann::ordered_json& patch);
  /// `key.path=value`; the value is parsed as JSON, falling back to a string.
  void set(std::string_view assignment);

  std::uint64_t seed() const;
  void set_seed(std::uint64_t seed);

  SynthConfig synth() const;
  std::size_t side() const;
  double val_ratio() const;
  GbmParams gbm() const;
  nn::TrainConfig cnn() const;
  nn::ArchSpec arch() const;
  AugmentationPolicy augment_policy() const;
  int augment_multiplier() const;
  nn::PretrainConfig pretrain() const;
  int k_folds() const;
  std::vector<std::string> stack_members() const;
  int stack_cnn_epochs() const;
  CurveConfig curve() const;
  std::vector<double> curve_fractions() const;

  const nlohmann::ordered_json& doc() const { return doc_; }
  std::string dump() const { return doc_.dump(2) + "\n"; }

 private:
  nlohmann::ordered_json doc_;
};

}  // namespace icesar
