#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "icesar/data_model.hpp"
#include "icesar/image_plane.hpp"

namespace icesar {

enum class ReflectAxis { horizontal, vertical };
enum class GradientAxis { x, y };

/// Random geometric augmentation; defaults match the Keras generator used for
/// the original experiments (10% shifts, 15 degree rotations).
struct AugmentationPolicy {
  double width_shift_frac = 0.1;
  double height_shift_frac = 0.1;
  double rotation_max_deg = 15.0;
  bool allow_horizontal_reflect = false;
  bool allow_vertical_reflect = false;

  void validate() const;
};

// All transforms keep the input dimensions and fill out-of-support pixels by
// edge replication.

/// Counterclockwise rotation about the image center. Multiples of 90 degrees
/// are exact index permutations (square planes); other angles use bilinear
/// interpolation with clamped source coordinates.
ImagePlane rotate(const ImagePlane& p, double degrees);
ImagePlane reflect(const ImagePlane& p, ReflectAxis axis);
/// Moves content dx columns right and dy rows down.
ImagePlane shift(const ImagePlane& p, int dx, int dy);
ImagePlane transpose(const ImagePlane& p);

ImagePlane gaussian_smooth(const ImagePlane& p, double sigma);
/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);
ImagePlane sobel(const ImagePlane& p, GradientAxis axis);
ImagePlane gradient_magnitude(const ImagePlane& p);
ImagePlane laplacian(const ImagePlane& p);

struct AugmentationDraw {
  int dx = 0;
  int dy = 0;
  double angle_deg = 0.0;
  bool reflect_horizontal = false;
  bool reflect_vertical = false;
};

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, std::size_t height, std::size_t width,
                                   std::uint64_t rng_state);
ImagePlane apply_augmentation(const ImagePlane& p, const AugmentationDraw& draw);

/// One random draw applied identically to both bands. Label and angle are
/// kept; the id gets `id_suffix` appended.
SarSample sample_augmentation(const SarSample& s, const AugmentationPolicy& policy, std::uint64_t rng_state,
                              std::string_view id_suffix = "_aug");

/// Originals followed by (multiplier - 1) augmented variants of each sample.
SampleSet augment_dataset(const SampleSet& set, const AugmentationPolicy& policy, int multiplier,
                          std::uint64_t seed);

/// 8-bit binary PGM with linear min-max scaling (constant planes map to 0).
void write_pgm(const ImagePlane& p, const std::string& path);

}  // namespace icesar
