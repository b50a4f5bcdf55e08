#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icesar/data_model.hpp"
#include "icesar/image_plane.hpp"

namespace icesar {

/// Shifts every pixel by -10*log10(cos theta), standardizing the plane to a
/// 0 degree incidence angle. theta in degrees, (0, 90).
ImagePlane normalize_incidence(const ImagePlane& p, double theta_deg);

/// The dB offset added by normalize_incidence.
double incidence_correction_db(double theta_deg);

struct DerivedBands {
  ImagePlane diff;   // hh - hv, dB
  ImagePlane ratio;  // linear-power hh / hv
};

DerivedBands derived_bands(const SarSample& s);

struct BandStats {
  double min = 0, max = 0, mean = 0, median = 0, q1 = 0, q3 = 0, std = 0;
};

/// Quantile at position q*(n-1) of the sorted sample, linearly interpolated.
double sorted_quantile(std::span<const double> sorted, double q);

/// std uses the n-1 denominator; a single value has std 0.
BandStats band_stats(std::span<const double> values);
BandStats band_stats(const ImagePlane& p);

/// 30 named scalars in a fixed order: for each band in (hh, hv, diff, ratio)
/// the stats (min, max, mean, median, q1, q3, std), then inc_angle and
/// angle_missing.
struct FeatureVector {
  static constexpr std::size_t kSize = 30;
  static constexpr std::size_t kAngle = 28;
  static constexpr std::size_t kAngleMissing = 29;

  std::array<double, kSize> values{};

  static const std::array<std::string, kSize>& names();
  /// Index of a named field; throws InvalidArgument for an unknown name.
  static std::size_t index_of(std::string_view name);

  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

/// `mean_angle` stands in when the sample has no angle.
FeatureVector feature_vector(const SarSample& s, double mean_angle);

/// Feature rows for a whole set, imputing absent angles with `mean_angle`.
std::vector<std::vector<double>> feature_rows(const SampleSet& set, double mean_angle);

/// The 14 HH/HV statistic field indices (the raw-band correlation view).
std::vector<std::size_t> raw_band_stat_fields();

using Matrix = std::vector<std::vector<double>>;

/// Pearson correlation of the selected fields across vectors.
Matrix correlation_matrix(std::span<const FeatureVector> vs, std::span<const std::size_t> fields);

/// id, [label,] then the 30 feature columns.
void write_features_csv(std::ostream& out, const SampleSet& set, std::span<const FeatureVector> vs);
void write_correlation_csv(std::ostream& out, const Matrix& m, std::span<const std::size_t> fields);

}  // namespace icesar
