#include "icesar/sar_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "icesar/errors.hpp"

namespace icesar {

double incidence_correction_db(double theta_deg) {
  if (!(theta_deg > 0.0 && theta_deg < 90.0)) throw InvalidArgument("incidence angle outside (0, 90)");
  return -10.0 * std::log10(std::cos(theta_deg * std::numbers::pi / 180.0));
}

ImagePlane normalize_incidence(const ImagePlane& p, double theta_deg) {
  const double offset = incidence_correction_db(theta_deg);
  std::vector<double> out(p.values().begin(), p.values().end());
  for (double& v : out) v += offset;
  return ImagePlane(p.height(), p.width(), std::move(out));
}

DerivedBands derived_bands(const SarSample& s) {
  if (!s.hh.same_shape(s.hv)) throw DimensionError("derived_bands: band shapes differ");
  const auto n = s.hh.size();
  std::vector<double> diff(n), ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hh = s.hh.values()[i], hv = s.hv.values()[i];
    diff[i] = hh - hv;
    ratio[i] = std::pow(10.0, hh / 10.0) / std::pow(10.0, hv / 10.0);
  }
  return {ImagePlane(s.hh.height(), s.hh.width(), std::move(diff)),
          ImagePlane(s.hh.height(), s.hh.width(), std::move(ratio))};
}

double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BandStats band_stats(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("band_stats: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());

  BandStats st;
  st.min = sorted.front();
  st.max = sorted.back();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  st.mean = sum / n;
  st.median = sorted_quantile(sorted, 0.5);
  st.q1 = sorted_quantile(sorted, 0.25);
  st.q3 = sorted_quantile(sorted, 0.75);
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(ss / (n - 1.0));
  }
  return st;
}

BandStats band_stats(const ImagePlane& p) { return band_stats(p.values()); }

const std::array<std::string, FeatureVector::kSize>& FeatureVector::names() {
  static const std::array<std::string, kSize> table = [] {
    std::array<std::string, kSize> t;
    const char* bands[] = {"hh", "hv", "diff", "ratio"};
    const char* stats[] = {"min", "max", "mean", "median", "q1", "q3", "std"};
    std::size_t k = 0;
    for (const char* b : bands) {
      for (const char* s : stats) t[k++] = std::string(b) + "_" + s;
    }
    t[kAngle] = "inc_angle";
    t[kAngleMissing] = "angle_missing";
    return t;
  }();
  return table;
}

std::size_t FeatureVector::index_of(std::string_view name) {
  const auto& n = names();
  const auto it = std::find(n.begin(), n.end(), name);
  if (it == n.end()) throw InvalidArgument("unknown feature: " + std::string(name));
  return static_cast<std::size_t>(it - n.begin());
}

FeatureVector feature_vector(const SarSample& s, double mean_angle) {
  const auto [diff, ratio] = derived_bands(s);
  FeatureVector fv;
  std::size_t k = 0;
  for (const ImagePlane* band : {&s.hh, &s.hv, &diff, &ratio}) {
    const auto st = band_stats(*band);
    for (double v : {st.min, st.max, st.mean, st.median, st.q1, st.q3, st.std}) fv.values[k++] = v;
  }
  fv.values[FeatureVector::kAngle] = s.inc_angle.value_or(mean_angle);
  fv.values[FeatureVector::kAngleMissing] = (s.angle_imputed || !s.inc_angle) ? 1.0 : 0.0;
  return fv;
}

std::vector<std::vector<double>> feature_rows(const SampleSet& set, double mean_angle) {
  std::vector<std::vector<double>> rows;
  rows.reserve(set.size());
  for (const auto& s : set.samples()) {
    const auto fv = feature_vector(s, mean_angle);
    rows.emplace_back(fv.values.begin(), fv.values.end());
  }
  return rows;
}

std::vector<std::size_t> raw_band_stat_fields() {
  std::vector<std::size_t> f(14);
  for (std::size_t i = 0; i < 14; ++i) f[i] = i;
  return f;
}

Matrix correlation_matrix(std::span<const FeatureVector> vs, std::span<const std::size_t> fields) {
  if (vs.size() < 2) throw InvalidArgument("correlation_matrix: need at least 2 vectors");
  const auto n = static_cast<double>(vs.size());
  const auto m = fields.size();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    if (fields[a] >= FeatureVector::kSize) throw InvalidArgument("correlation_matrix: field index out of range");
    for (const auto& v : vs) mean[a] += v[fields[a]];
    mean[a] /= n;
    for (const auto& v : vs) sd[a] += (v[fields[a]] - mean[a]) * (v[fields[a]] - mean[a]);
    sd[a] = std::sqrt(sd[a]);
    if (!(sd[a] > 0.0)) {
      throw InvalidArgument("correlation_matrix: field " + FeatureVector::names()[fields[a]] + " has zero variance");
    }
  }
  Matrix corr(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a) {
    corr[a][a] = 1.0;
    for (std::size_t b = a + 1; b < m; ++b) {
      double cov = 0.0;
      for (const auto& v : vs) cov += (v[fields[a]] - mean[a]) * (v[fields[b]] - mean[b]);
      const double r = std::clamp(cov / (sd[a] * sd[b]), -1.0, 1.0);
      corr[a][b] = corr[b][a] = r;
    }
  }
  return corr;
}

namespace {

void put_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_features_csv(std::ostream& out, const SampleSet& set, std::span<const FeatureVector> vs) {
  if (vs.size() != set.size()) throw DimensionError("write_features_csv: row count mismatch");
  const bool labeled = set.labeled() && !set.empty();
  out << "id";
  if (labeled) out << ",is_iceberg";
  for (const auto& name : FeatureVector::names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < vs.size(); ++i) {
    out << set[i].id;
    if (labeled) out << ',' << static_cast<int>(*set[i].label);
    for (double v : vs[i].values) {
      out << ',';
      put_number(out, v);
    }
    out << '\n';
  }
}

void write_correlation_csv(std::ostream& out, const Matrix& m, std::span<const std::size_t> fields) {
  const auto& names = FeatureVector::names();
  out << "field";
  for (auto f : fields) out << ',' << names[f];
  out << '\n';
  for (std::size_t a = 0; a < m.size(); ++a) {
    out << names[fields[a]];
    for (double v : m[a]) {
      out << ',';
      put_number(out, v);
    }
    out << '\n';
  }
}

}  // namespace icesar
