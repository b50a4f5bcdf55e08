#include "icesar/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "icesar/errors.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/rng.hpp"
#include "icesar/sar_features.hpp"

namespace icesar {

namespace fs = std::filesystem;

std::vector<CurveRow> learning_curve(const SampleSet& base, std::span<const double> fractions,
                                     const CurveConfig& cfg) {
  if (fractions.empty()) throw InvalidArgument("learning curve: no fractions");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw InvalidArgument("learning curve: fractions must lie in (0, 1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) throw InvalidArgument("learning curve: fractions must ascend");
  }
  cfg.train.validate();
  cfg.policy.validate();
  if (cfg.augment_multiplier < 1) throw InvalidArgument("learning curve: augment multiplier must be >= 1");

  const auto imputed = impute_incidence(base).first;
  const auto [pool, val] = split_train_validation(imputed, cfg.val_ratio, cfg.seed);
  if (cfg.arch.input_ch != cfg.train.recipe.channels.size()) {
    throw DimensionError("learning curve: architecture input channels differ from the recipe");
  }

  std::vector<CurveRow> rows;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double f = fractions[i];
    SampleSet train = f < 1.0 ? split_train_validation(pool, f, derive_seed(cfg.seed, 0xc0e5, i)).second : pool;
    if (train.size() < 2 * cfg.train.batch_size) {
      throw InvalidArgument("learning curve: fraction " + std::to_string(f) + " leaves " +
                            std::to_string(train.size()) + " samples, fewer than two batches");
    }
    const std::size_t n = train.size();
    if (cfg.augment_multiplier > 1) {
      train = augment_dataset(train, cfg.policy, cfg.augment_multiplier, derive_seed(cfg.seed, 0xa06, i));
    }
    const auto result = nn::fit(nn::build_classifier(cfg.arch, cfg.train.seed), train, val, cfg.train);
    const auto& best = result.history.best();
    rows.push_back({f, n, best.train_loss, best.val_loss, best.val_loss - best.train_loss});
  }
  return rows;
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows) {
  out << "fraction,n_samples,train_loss,val_loss,gap\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", r.fraction, r.n_samples, r.train_loss,
                  r.val_loss, r.gap);
    out << buf;
  }
}

void write_submission(std::ostream& out, const PredictionSet& preds) {
  if (preds.ids.size() != preds.probs.size()) throw DimensionError("submission: ids and probs differ in length");
  out << "id,is_iceberg\n";
  char buf[64];
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.10f\n", preds.probs[i]);
    out << preds.ids[i] << buf;
  }
}

void write_submission(const PredictionSet& preds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_submission(out, preds);
  if (!out) throw IoError("write failed: " + path);
}

PredictionSet read_submission(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "id,is_iceberg") throw ParseError("submission: header must be id,is_iceberg");
  PredictionSet p;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("submission: missing comma on line " + std::to_string(line_no));
    try {
      std::size_t used = 0;
      const std::string num = line.substr(comma + 1);
      const double v = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing");
      p.ids.push_back(line.substr(0, comma));
      p.probs.push_back(v);
    } catch (const std::logic_error&) {
      throw ParseError("submission: bad probability on line " + std::to_string(line_no));
    }
  }
  return p;
}

PredictionSet read_submission(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_submission(in);
}

std::string metrics_json(const PredictionSet& preds, const SampleSet& labels, const std::string& config_json) {
  const auto y = aligned_labels(preds, labels);
  const auto cm = metric_confusion(preds.probs, y);
  nlohmann::ordered_json doc;
  doc["logloss"] = loss_logloss(preds.probs, y);
  doc["accuracy"] = metric_accuracy(preds.probs, y);
  doc["tn"] = cm.tn;
  doc["fp"] = cm.fp;
  doc["fn"] = cm.fn;
  doc["tp"] = cm.tp;
  doc["n"] = cm.total();
  try {
    doc["config"] = config_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metrics: config is not JSON: ") + e.what());
  }
  return doc.dump(2) + "\n";
}

std::vector<std::uint8_t> composite_rgb(const SarSample& s) {
  if (!s.hh.same_shape(s.hv)) throw DimensionError("composite: band shapes differ");
  const std::size_t n = s.hh.size();
  std::vector<double> blue(n);
  for (std::size_t i = 0; i < n; ++i) blue[i] = (s.hh.values()[i] + s.hv.values()[i]) / 2.0;
  std::vector<std::uint8_t> rgb(3 * n);
  auto scale_into = [&](std::span<const double> v, std::size_t channel) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = range > 0.0 ? (v[i] - *lo) / range : 0.0;
      rgb[3 * i + channel] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  };
  scale_into(s.hh.values(), 0);
  scale_into(s.hv.values(), 1);
  scale_into(blue, 2);
  return rgb;
}

void write_composite_ppm(const SarSample& s, const std::string& path) {
  const auto rgb = composite_rgb(s);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << s.hh.width() << ' ' << s.hh.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_report(const ReportInputs& in, const std::string& out_dir) {
  std::vector<std::string> missing;
  for (const auto* p : {&in.predictions, &in.samples, &in.config}) {
    if (p->empty() || !fs::is_regular_file(*p)) missing.push_back(p->empty() ? "(unset)" : *p);
  }
  if (!in.history.empty() && !fs::is_regular_file(in.history)) missing.push_back(in.history);
  if (!missing.empty()) {
    std::string msg = "report: missing artifacts:";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }

  const auto preds = read_submission(in.predictions);
  const auto samples = load_samples(in.samples, true, in.side);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  // Metrics cover the predicted ids only (a validation split of the samples).
  std::vector<SarSample> subset;
  {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) index.emplace(samples[i].id, i);
    for (const auto& id : preds.ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw DimensionError("report: no sample for prediction id " + id);
      subset.push_back(samples[it->second]);
    }
  }
  const SampleSet scored(std::move(subset), samples.provenance());
  write_file(dir / "metrics.json", metrics_json(preds, scored, read_file(in.config)));

  const double mean_angle = impute_incidence(samples).second;
  std::vector<FeatureVector> vs;
  vs.reserve(samples.size());
  for (const auto& s : samples.samples()) vs.push_back(feature_vector(s, mean_angle));
  const auto fields = raw_band_stat_fields();
  std::ostringstream corr;
  write_correlation_csv(corr, correlation_matrix(vs, fields), fields);
  write_file(dir / "correlation.csv", corr.str());

  if (!in.history.empty()) write_file(dir / "history.csv", read_file(in.history));

  for (const auto& id : in.composite_ids) {
    const auto it = std::find_if(samples.samples().begin(), samples.samples().end(),
                                 [&](const SarSample& s) { return s.id == id; });
    if (it == samples.samples().end()) throw InvalidArgument("report: unknown composite id " + id);
    write_composite_ppm(*it, (dir / ("composite_" + id + ".ppm")).string());
  }
}

}  // namespace icesar
