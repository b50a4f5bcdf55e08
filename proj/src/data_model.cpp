#include "icesar/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "icesar/errors.hpp"
#include "icesar/rng.hpp"

namespace icesar {

using nlohmann::json;

ImagePlane::ImagePlane(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height_ < 3 || width_ < 3) {
    throw DimensionError("image plane must be at least 3x3, got " + std::to_string(height_) + "x" +
                         std::to_string(width_));
  }
  if (values_.size() != height_ * width_) {
    throw DimensionError("image plane holds " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(height_ * width_));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("image plane contains a non-finite value");
  }
}

ImagePlane ImagePlane::filled(std::size_t height, std::size_t width, double value) {
  return ImagePlane(height, width, std::vector<double>(height * width, value));
}

void SarSample::validate() const {
  if (!hh.same_shape(hv)) throw DimensionError("sample " + id + ": HH and HV shapes differ");
  if (inc_angle && !(*inc_angle > 0.0 && *inc_angle < 90.0)) {
    throw InvalidArgument("sample " + id + ": incidence angle outside (0, 90)");
  }
}

SampleSet::SampleSet(std::vector<SarSample> samples, Provenance provenance)
    : samples_(std::move(samples)), provenance_(provenance) {
  std::unordered_set<std::string> seen;
  for (const auto& s : samples_) {
    s.validate();
    if (!seen.insert(s.id).second) throw InvalidArgument("duplicate sample id: " + s.id);
  }
}

bool SampleSet::labeled() const {
  return std::all_of(samples_.begin(), samples_.end(), [](const SarSample& s) { return s.label.has_value(); });
}

std::size_t SampleSet::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(samples_.begin(), samples_.end(),
                                                [&](const SarSample& s) { return s.label == label; }));
}

void SynthConfig::validate() const {
  if (n_samples < 2) throw InvalidArgument("synth: n_samples must be >= 2");
  if (!(iceberg_fraction > 0.0 && iceberg_fraction < 1.0)) {
    throw InvalidArgument("synth: iceberg_fraction must lie in (0, 1)");
  }
  if (speckle_looks < 1) throw InvalidArgument("synth: speckle_looks must be a positive integer");
  if (side < 8) throw InvalidArgument("synth: side must be >= 8");
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

ImagePlane read_band(const json& record, const char* key, std::size_t index, std::size_t side) {
  const auto it = record.find(key);
  if (it == record.end() || !it->is_array()) {
    throw ParseError("record " + std::to_string(index) + ": missing array field " + key);
  }
  if (it->size() != side * side) {
    throw DimensionError("record " + std::to_string(index) + ": " + key + " has " +
                         std::to_string(it->size()) + " values, expected " + std::to_string(side * side));
  }
  std::vector<double> values;
  values.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw ParseError("record " + std::to_string(index) + ": non-numeric value in " + key);
    values.push_back(v.get<double>());
  }
  try {
    return ImagePlane(side, side, std::move(values));
  } catch (const Error& e) {
    throw ParseError("record " + std::to_string(index) + ": " + e.what());
  }
}

}  // namespace

SampleSet parse_samples(std::string_view raw, bool labeled, std::size_t side) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError("expected a JSON array of records");

  std::vector<SarSample> samples;
  samples.reserve(doc.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    const std::string where = "record " + std::to_string(i);
    if (!rec.is_object()) throw ParseError(where + ": not an object");
    const auto id_it = rec.find("id");
    if (id_it == rec.end() || !id_it->is_string()) throw ParseError(where + ": missing string id");
    std::string id = id_it->get<std::string>();
    if (!seen.insert(id).second) throw InvalidArgument(where + ": duplicate sample id: " + id);

    SarSample s{id, read_band(rec, "band_1", i, side), read_band(rec, "band_2", i, side), std::nullopt, false,
                std::nullopt};

    const auto angle_it = rec.find("inc_angle");
    if (angle_it == rec.end()) throw ParseError(where + ": missing inc_angle");
    if (angle_it->is_number()) {
      s.inc_angle = angle_it->get<double>();
      if (!(*s.inc_angle > 0.0 && *s.inc_angle < 90.0)) {
        throw ParseError(where + ": inc_angle outside (0, 90)");
      }
    } else if (!(angle_it->is_string() && angle_it->get<std::string>() == "na")) {
      throw ParseError(where + ": inc_angle must be a number or \"na\"");
    }

    if (labeled) {
      const auto lab = rec.find("is_iceberg");
      if (lab == rec.end() || !lab->is_number_integer()) {
        throw LabelError(where + ": is_iceberg missing or not an integer");
      }
      const auto v = lab->get<long long>();
      if (v != 0 && v != 1) throw LabelError(where + ": is_iceberg must be 0 or 1");
      s.label = static_cast<Label>(v);
    }
    samples.push_back(std::move(s));
  }
  return SampleSet(std::move(samples), Provenance::real);
}

std::string serialize_samples(const SampleSet& set) {
  json doc = json::array();
  for (const auto& s : set.samples()) {
    if (s.hh.height() != s.hh.width()) throw DimensionError("serialize: bands must be square");
    json rec;
    rec["id"] = s.id;
    rec["band_1"] = std::vector<double>(s.hh.values().begin(), s.hh.values().end());
    rec["band_2"] = std::vector<double>(s.hv.values().begin(), s.hv.values().end());
    if (s.inc_angle) {
      rec["inc_angle"] = *s.inc_angle;
    } else {
      rec["inc_angle"] = "na";
    }
    if (s.label) rec["is_iceberg"] = static_cast<int>(*s.label);
    doc.push_back(std::move(rec));
  }
  return doc.dump();
}

SampleSet load_samples(const std::string& path, bool labeled, std::size_t side) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_samples(buf.str(), labeled, side);
}

void save_samples(const SampleSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_samples(set);
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Splitting and imputation

std::pair<SampleSet, SampleSet> split_train_validation(const SampleSet& set, double ratio_val,
                                                       std::uint64_t seed) {
  if (!(ratio_val > 0.0 && ratio_val < 1.0)) throw InvalidArgument("split: ratio_val must lie in (0, 1)");
  if (!set.labeled()) throw LabelError("split: every sample must be labeled");

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < set.size(); ++i) by_class[static_cast<int>(*set[i].label)].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].empty()) throw LabelError("split: class " + std::to_string(c) + " has no members");
  }

  // Largest-remainder allocation keeps each class within one sample of its
  // exact share while the total equals round(ratio * N).
  const auto total = static_cast<std::size_t>(std::lround(ratio_val * static_cast<double>(set.size())));
  std::size_t quota[2];
  double remainder[2];
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = ratio_val * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  while (assigned < total) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    if (quota[c] < by_class[c].size()) ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }

  std::vector<bool> in_val(set.size(), false);
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, 0x5e11, static_cast<std::uint64_t>(c)));
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < quota[c]; ++k) in_val[idx[k]] = true;
  }

  std::vector<SarSample> train, val;
  for (std::size_t i = 0; i < set.size(); ++i) (in_val[i] ? val : train).push_back(set[i]);
  return {SampleSet(std::move(train), set.provenance()), SampleSet(std::move(val), set.provenance())};
}

std::pair<SampleSet, double> impute_incidence(const SampleSet& set) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : set.samples()) {
    if (s.inc_angle && !s.angle_imputed) {
      sum += *s.inc_angle;
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("impute_incidence: no sample has an incidence angle");
  const double mean = sum / static_cast<double>(n);
  return {impute_incidence_with(set, mean), mean};
}

SampleSet impute_incidence_with(const SampleSet& set, double mean_angle) {
  if (!(mean_angle > 0.0 && mean_angle < 90.0)) throw InvalidArgument("impute: mean angle outside (0, 90)");
  std::vector<SarSample> out = set.samples();
  for (auto& s : out) {
    if (!s.inc_angle) {
      s.inc_angle = mean_angle;
      s.angle_imputed = true;
    }
  }
  return SampleSet(std::move(out), set.provenance());
}

std::vector<int> labels_of(const SampleSet& set) {
  std::vector<int> y;
  y.reserve(set.size());
  for (const auto& s : set.samples()) {
    if (!s.label) throw LabelError("sample " + s.id + " is unlabeled");
    y.push_back(static_cast<int>(*s.label));
  }
  return y;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace {

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

struct TargetShape {
  double row, col;        // center
  double semi_major;      // pixels
  double semi_minor;
  double orientation;     // radians
  double hh_db, hv_db;    // absolute target backscatter
};

SynthScene make_scene(const SynthConfig& cfg, std::size_t index, Label label) {
  Rng rng(derive_seed(cfg.seed, 0x5c3e, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const auto side = cfg.side;
  const double s = static_cast<double>(side);
  const double center = (s - 1.0) / 2.0;

  const double angle = uniform(20.0, 45.0);
  const double hh_bg_db = uniform(-27.0, -23.0);
  const double hv_bg_db = hh_bg_db - uniform(6.0, 9.0);

  TargetShape t{};
  t.row = center + uniform(-0.1, 0.1) * s;
  t.col = center + uniform(-0.1, 0.1) * s;
  t.orientation = uniform(0.0, std::numbers::pi);
  t.hh_db = hh_bg_db + uniform(12.0, 18.0);
  if (label == Label::iceberg) {
    // Large, roughly isotropic, volume scattering keeps HV close to HH.
    t.semi_major = uniform(0.075, 0.11) * s;
    t.semi_minor = t.semi_major / uniform(1.0, 1.4);
    t.hv_db = t.hh_db - uniform(0.0, 3.0);
  } else {
    // Elongated hull, HV well below HH.
    t.semi_major = uniform(0.06, 0.10) * s;
    t.semi_minor = t.semi_major / uniform(3.0, 5.0);
    t.hv_db = t.hh_db - uniform(6.0, 10.0);
  }

  // Brightness falls with incidence angle as cos(theta); normalizing by the
  // cosine recovers the angle-free level.
  const double angle_gain = std::cos(angle * std::numbers::pi / 180.0);
  const double hh_bg = db_to_power(hh_bg_db), hv_bg = db_to_power(hv_bg_db);
  const double hh_t = db_to_power(t.hh_db), hv_t = db_to_power(t.hv_db);
  const double co = std::cos(t.orientation), si = std::sin(t.orientation);

  const double looks = static_cast<double>(cfg.speckle_looks);
  std::gamma_distribution<double> speckle(looks, 1.0 / looks);

  std::vector<double> hh(side * side), hv(side * side);
  std::vector<std::uint8_t> mask(side * side, 0);
  std::size_t peak = 0;
  double peak_profile = -1.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double dy = static_cast<double>(r) - t.row, dx = static_cast<double>(c) - t.col;
      const double u = (co * dx + si * dy) / t.semi_major;
      const double v = (-si * dx + co * dy) / t.semi_minor;
      const double profile = std::exp(-0.5 * (u * u + v * v));
      const std::size_t k = r * side + c;
      if (profile >= 0.5) mask[k] = 1;
      if (profile > peak_profile) {
        peak_profile = profile;
        peak = k;
      }
      const double hh_power = angle_gain * (hh_bg + hh_t * profile) * speckle(rng);
      const double hv_power = angle_gain * (hv_bg + hv_t * profile) * speckle(rng);
      hh[k] = 10.0 * std::log10(hh_power);
      hv[k] = 10.0 * std::log10(hv_power);
    }
  }
  mask[peak] = 1;

  char id[32];
  std::snprintf(id, sizeof id, "synth_%06zu", index);
  SarSample sample{id, ImagePlane(side, side, std::move(hh)), ImagePlane(side, side, std::move(hv)), angle,
                   false, label};
  return {std::move(sample), std::move(mask)};
}

}  // namespace

std::vector<SynthScene> synth_scenes(const SynthConfig& cfg) {
  cfg.validate();
  const auto n_ice =
      static_cast<std::size_t>(std::lround(cfg.iceberg_fraction * static_cast<double>(cfg.n_samples)));
  std::vector<Label> labels(cfg.n_samples, Label::ship);
  std::fill_n(labels.begin(), n_ice, Label::iceberg);
  Rng rng(derive_seed(cfg.seed, 0x1abe1));
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<SynthScene> scenes;
  scenes.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) scenes.push_back(make_scene(cfg, i, labels[i]));
  return scenes;
}

SampleSet synth_dataset(const SynthConfig& cfg) {
  auto scenes = synth_scenes(cfg);
  std::vector<SarSample> samples;
  samples.reserve(scenes.size());
  for (auto& sc : scenes) samples.push_back(std::move(sc.sample));
  return SampleSet(std::move(samples), Provenance::synthetic);
}

}  // namespace icesar
