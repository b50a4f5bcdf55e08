#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "icesar/data_model.hpp"
#include "icesar/image_ops.hpp"
#include "icesar/metrics.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/nn/train.hpp"

namespace icesar {

struct CurveConfig {
  nn::TrainConfig train{};
  nn::ArchSpec arch{};  // input_ch must match the recipe
  AugmentationPolicy policy{};
  int augment_multiplier = 1;  // 1 disables augmentation
  double val_ratio = 0.2;      // fixed held-out share of the base set
  std::uint64_t seed = 0;
};

struct CurveRow {
  double fraction = 0.0;
  std::size_t n_samples = 0;  // training samples before augmentation
  double train_loss = 0.0;
  double val_loss = 0.0;
  double gap = 0.0;  // val_loss - train_loss at the best epoch
};

/// Holds out a fixed validation split of `base`, then for each fraction trains
/// the reference CNN on a stratified subsample of the remainder.
std::vector<CurveRow> learning_curve(const SampleSet& base, std::span<const double> fractions,
                                     const CurveConfig& cfg);
void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows);

/// Header `id,is_iceberg`, probabilities with 10 decimals, rows in input order.
void write_submission(const PredictionSet& preds, const std::string& path);
void write_submission(std::ostream& out, const PredictionSet& preds);
PredictionSet read_submission(const std::string& path);
PredictionSet read_submission(std::istream& in);

/// Metrics JSON text with keys logloss, accuracy, tn, fp, fn, tp, n, config.
std::string metrics_json(const PredictionSet& preds, const SampleSet& labels, const std::string& config_json);

/// R = hh, G = hv, B = (hh + hv) / 2, each min-max scaled to 0..255 (binary PPM).
std::vector<std::uint8_t> composite_rgb(const SarSample& s);
void write_composite_ppm(const SarSample& s, const std::string& path);

struct ReportInputs {
  std::string predictions;  // submission-format CSV
  std::string samples;      // labeled samples JSON
  std::string history;      // optional; copied when non-empty
  std::string config;       // resolved-config JSON echoed into the metrics
  std::vector<std::string> composite_ids;
  std::size_t side = kKaggleSide;
};

/// Writes metrics.json, correlation.csv, history.csv (when given) and
/// composite_<id>.ppm into `out_dir`. Throws IoError listing every missing input.
void write_report(const ReportInputs& in, const std::string& out_dir);

}  // namespace icesar
