#include "icesar/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "icesar/errors.hpp"
#include "icesar/rng.hpp"

namespace icesar {

namespace {

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
}

// 3x3 correlation with edge-replicate padding.
ImagePlane correlate3x3(const ImagePlane& p, const double (&k)[3][3]) {
  const auto h = p.height(), w = p.width();
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        const auto rr = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(r) + i - 1, h));
        for (int j = 0; j < 3; ++j) {
          if (k[i][j] == 0.0) continue;
          const auto cc = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(c) + j - 1, w));
          acc += k[i][j] * p(rr, cc);
        }
      }
      out[r * w + c] = acc;
    }
  }
  return ImagePlane(h, w, std::move(out));
}

ImagePlane rotate_bilinear(const ImagePlane& p, double degrees) {
  const auto h = p.height(), w = p.width();
  const double theta = degrees * std::numbers::pi / 180.0;
  const double co = std::cos(theta), si = std::sin(theta);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0, cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double max_r = static_cast<double>(h - 1), max_c = static_cast<double>(w - 1);

  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double xd = static_cast<double>(c) - cx, yd = static_cast<double>(r) - cy;
      const double sc = std::clamp(co * xd - si * yd + cx, 0.0, max_c);
      const double sr = std::clamp(si * xd + co * yd + cy, 0.0, max_r);
      const auto r0 = static_cast<std::size_t>(std::floor(sr));
      const auto c0 = static_cast<std::size_t>(std::floor(sc));
      const auto r1 = std::min(r0 + 1, h - 1), c1 = std::min(c0 + 1, w - 1);
      const double fr = sr - static_cast<double>(r0), fc = sc - static_cast<double>(c0);
      const double top = (1.0 - fc) * p(r0, c0) + fc * p(r0, c1);
      const double bottom = (1.0 - fc) * p(r1, c0) + fc * p(r1, c1);
      out[r * w + c] = (1.0 - fr) * top + fr * bottom;
    }
  }
  return ImagePlane(h, w, std::move(out));
}

}  // namespace

void AugmentationPolicy::validate() const {
  if (!(width_shift_frac >= 0.0 && width_shift_frac < 0.5) || !(height_shift_frac >= 0.0 && height_shift_frac < 0.5)) {
    throw InvalidArgument("augmentation: shift fractions must lie in [0, 0.5)");
  }
  if (!(rotation_max_deg >= 0.0 && rotation_max_deg <= 180.0)) {
    throw InvalidArgument("augmentation: rotation_max_deg must lie in [0, 180]");
  }
}

ImagePlane rotate(const ImagePlane& p, double degrees) {
  if (!std::isfinite(degrees)) throw InvalidArgument("rotate: non-finite angle");
  double d = std::fmod(degrees, 360.0);
  if (d < 0.0) d += 360.0;

  const auto h = p.height(), w = p.width();
  if (d == 0.0) return p;
  if (d == 180.0) {
    std::vector<double> out(p.values().rbegin(), p.values().rend());
    return ImagePlane(h, w, std::move(out));
  }
  if ((d == 90.0 || d == 270.0) && h == w) {
    const std::size_t n = h;
    std::vector<double> out(n * n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        // 90 degrees counterclockwise sends (r, c) to (n-1-c, r).
        if (d == 90.0) {
          out[(n - 1 - c) * n + r] = p(r, c);
        } else {
          out[c * n + (n - 1 - r)] = p(r, c);
        }
      }
    }
    return ImagePlane(n, n, std::move(out));
  }
  return rotate_bilinear(p, d);
}

ImagePlane reflect(const ImagePlane& p, ReflectAxis axis) {
  const auto h = p.height(), w = p.width();
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      out[r * w + c] = axis == ReflectAxis::horizontal ? p(r, w - 1 - c) : p(h - 1 - r, c);
    }
  }
  return ImagePlane(h, w, std::move(out));
}

ImagePlane shift(const ImagePlane& p, int dx, int dy) {
  const auto h = p.height(), w = p.width();
  if (std::abs(dx) >= static_cast<int>(w) || std::abs(dy) >= static_cast<int>(h)) {
    throw InvalidArgument("shift: offset out of range");
  }
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    const auto sr = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(r) - dy, h));
    for (std::size_t c = 0; c < w; ++c) {
      const auto sc = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(c) - dx, w));
      out[r * w + c] = p(sr, sc);
    }
  }
  return ImagePlane(h, w, std::move(out));
}

ImagePlane transpose(const ImagePlane& p) {
  const auto h = p.height(), w = p.width();
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) out[c * h + r] = p(r, c);
  }
  return ImagePlane(w, h, std::move(out));
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian_smooth: sigma must be > 0");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    k[static_cast<std::size_t>(i + radius)] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  for (double v : k) sum += v;
  for (double& v : k) v /= sum;
  return k;
}

ImagePlane gaussian_smooth(const ImagePlane& p, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  const auto h = p.height(), w = p.width();

  std::vector<double> rows(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        const auto cc = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(c) + j, w));
        acc += k[static_cast<std::size_t>(j + radius)] * p(r, cc);
      }
      rows[r * w + c] = acc;
    }
  }
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const auto rr = static_cast<std::size_t>(clamp_index(static_cast<std::ptrdiff_t>(r) + i, h));
        acc += k[static_cast<std::size_t>(i + radius)] * rows[rr * w + c];
      }
      out[r * w + c] = acc;
    }
  }
  return ImagePlane(h, w, std::move(out));
}

ImagePlane sobel(const ImagePlane& p, GradientAxis axis) {
  static constexpr double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static constexpr double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  return correlate3x3(p, axis == GradientAxis::x ? kx : ky);
}

ImagePlane gradient_magnitude(const ImagePlane& p) {
  const auto gx = sobel(p, GradientAxis::x);
  const auto gy = sobel(p, GradientAxis::y);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(gx.values()[i], gy.values()[i]);
  return ImagePlane(p.height(), p.width(), std::move(out));
}

ImagePlane laplacian(const ImagePlane& p) {
  static constexpr double k[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
  return correlate3x3(p, k);
}

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, std::size_t height, std::size_t width,
                                   std::uint64_t rng_state) {
  policy.validate();
  Rng rng(rng_state);
  const int max_dx = static_cast<int>(std::floor(policy.width_shift_frac * static_cast<double>(width)));
  const int max_dy = static_cast<int>(std::floor(policy.height_shift_frac * static_cast<double>(height)));
  AugmentationDraw d;
  d.dx = std::uniform_int_distribution<int>(-max_dx, max_dx)(rng);
  d.dy = std::uniform_int_distribution<int>(-max_dy, max_dy)(rng);
  if (policy.rotation_max_deg > 0.0) {
    d.angle_deg = std::uniform_real_distribution<double>(-policy.rotation_max_deg, policy.rotation_max_deg)(rng);
  }
  std::bernoulli_distribution coin(0.5);
  d.reflect_horizontal = policy.allow_horizontal_reflect && coin(rng);
  d.reflect_vertical = policy.allow_vertical_reflect && coin(rng);
  return d;
}

ImagePlane apply_augmentation(const ImagePlane& p, const AugmentationDraw& draw) {
  ImagePlane out = rotate(p, draw.angle_deg);
  if (draw.dx != 0 || draw.dy != 0) out = shift(out, draw.dx, draw.dy);
  if (draw.reflect_horizontal) out = reflect(out, ReflectAxis::horizontal);
  if (draw.reflect_vertical) out = reflect(out, ReflectAxis::vertical);
  return out;
}

SarSample sample_augmentation(const SarSample& s, const AugmentationPolicy& policy, std::uint64_t rng_state,
                              std::string_view id_suffix) {
  const auto draw = draw_augmentation(policy, s.hh.height(), s.hh.width(), rng_state);
  SarSample out = s;
  out.id += id_suffix;
  out.hh = apply_augmentation(s.hh, draw);
  out.hv = apply_augmentation(s.hv, draw);
  return out;
}

SampleSet augment_dataset(const SampleSet& set, const AugmentationPolicy& policy, int multiplier,
                          std::uint64_t seed) {
  if (multiplier < 1) throw InvalidArgument("augment_dataset: multiplier must be >= 1");
  policy.validate();
  if (multiplier == 1) return set;
  std::vector<SarSample> out;
  out.reserve(set.size() * static_cast<std::size_t>(multiplier));
  for (const auto& s : set.samples()) out.push_back(s);
  for (int k = 1; k < multiplier; ++k) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto state = derive_seed(seed, static_cast<std::uint64_t>(k), i);
      out.push_back(sample_augmentation(set[i], policy, state, "_aug" + std::to_string(k)));
    }
  }
  return SampleSet(std::move(out), Provenance::augmented);
}

void write_pgm(const ImagePlane& p, const std::string& path) {
  const auto [lo, hi] = std::minmax_element(p.values().begin(), p.values().end());
  const double span = *hi - *lo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << p.width() << ' ' << p.height() << "\n255\n";
  for (double v : p.values()) {
    const double scaled = span > 0.0 ? (v - *lo) / span * 255.0 : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace icesar
