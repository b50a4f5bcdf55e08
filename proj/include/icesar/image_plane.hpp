#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace icesar {

/// A single-polarization backscatter image in dB, stored row-major.
///
/// Construction validates the invariants (at least 3x3, values.size() ==
/// height*width, all finite); an ImagePlane that exists is always valid.
class ImagePlane {
 public:
  ImagePlane(std::size_t height, std::size_t width, std::vector<double> values);

  static ImagePlane filled(std::size_t height, std::size_t width, double value);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const ImagePlane& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const ImagePlane&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

}  // namespace icesar
