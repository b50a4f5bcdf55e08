#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icesar/image_plane.hpp"

namespace icesar {

enum class Label : int { ship = 0, iceberg = 1 };

/// One radar scene: HH and HV planes, the incidence angle and an optional label.
struct SarSample {
  std::string id;
  ImagePlane hh;
  ImagePlane hv;
  std::optional<double> inc_angle;  // degrees, (0, 90)
  bool angle_imputed = false;
  std::optional<Label> label;

  /// Throws DimensionError / InvalidArgument on a violated invariant.
  void validate() const;

  bool operator==(const SarSample&) const = default;
};

enum class Provenance { real, synthetic, augmented };

class SampleSet {
 public:
  SampleSet() = default;
  /// Throws InvalidArgument naming the id when ids repeat.
  SampleSet(std::vector<SarSample> samples, Provenance provenance);

  const std::vector<SarSample>& samples() const { return samples_; }
  Provenance provenance() const { return provenance_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const SarSample& operator[](std::size_t i) const { return samples_[i]; }

  /// True when every sample carries a label.
  bool labeled() const;
  std::size_t count(Label label) const;

  bool operator==(const SampleSet&) const = default;

 private:
  std::vector<SarSample> samples_;
  Provenance provenance_ = Provenance::real;
};

struct SynthConfig {
  std::size_t n_samples = 1000;
  double iceberg_fraction = 0.5;
  int speckle_looks = 6;
  std::uint64_t seed = 0;
  std::size_t side = 75;  // scenes are side x side pixels

  void validate() const;
};

inline constexpr std::size_t kKaggleSide = 75;

/// Parses the competition JSON layout: an array of records with id, band_1,
/// band_2, inc_angle (number or "na") and, when `labeled`, is_iceberg.
SampleSet parse_samples(std::string_view raw, bool labeled, std::size_t side = kKaggleSide);

/// Writes the same layout back; absent angles become "na", unlabeled samples
/// omit is_iceberg. Bands must be square.
std::string serialize_samples(const SampleSet& set);

SampleSet load_samples(const std::string& path, bool labeled, std::size_t side = kKaggleSide);
void save_samples(const SampleSet& set, const std::string& path);

/// Stratified split; returns (train, validation). Each output keeps input order.
std::pair<SampleSet, SampleSet> split_train_validation(const SampleSet& set, double ratio_val,
                                                       std::uint64_t seed);

/// Replaces absent angles by the mean of the present ones.
std::pair<SampleSet, double> impute_incidence(const SampleSet& set);

/// Applies a previously computed mean angle (e.g. the training mean to test data).
SampleSet impute_incidence_with(const SampleSet& set, double mean_angle);

struct SynthScene {
  SarSample sample;
  std::vector<std::uint8_t> target_mask;  // row-major, 1 inside the target
};

std::vector<SynthScene> synth_scenes(const SynthConfig& cfg);
SampleSet synth_dataset(const SynthConfig& cfg);

std::vector<int> labels_of(const SampleSet& set);

}  // namespace icesar
