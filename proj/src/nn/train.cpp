#include "icesar/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "icesar/errors.hpp"
#include "icesar/image_ops.hpp"
#include "icesar/metrics.hpp"
#include "icesar/rng.hpp"
#include "icesar/sar_features.hpp"

namespace icesar::nn {

namespace {

constexpr std::string_view kChannelNames[] = {"hh",        "hv",          "diff",        "mean",
                                              "hh_smooth", "hv_smooth",   "hh_gradient", "hv_gradient",
                                              "hh_laplacian", "hv_laplacian"};

ImagePlane channel_plane(Channel c, const ImagePlane& hh, const ImagePlane& hv, double sigma) {
  auto combine = [&](double a_w, double b_w) {
    std::vector<double> out(hh.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a_w * hh.values()[i] + b_w * hv.values()[i];
    return ImagePlane(hh.height(), hh.width(), std::move(out));
  };
  switch (c) {
    case Channel::hh: return hh;
    case Channel::hv: return hv;
    case Channel::diff: return combine(1.0, -1.0);
    case Channel::mean: return combine(0.5, 0.5);
    case Channel::hh_smooth: return gaussian_smooth(hh, sigma);
    case Channel::hv_smooth: return gaussian_smooth(hv, sigma);
    case Channel::hh_gradient: return gradient_magnitude(hh);
    case Channel::hv_gradient: return gradient_magnitude(hv);
    case Channel::hh_laplacian: return laplacian(hh);
    case Channel::hv_laplacian: return laplacian(hv);
  }
  throw InvalidArgument("unknown channel");
}

Tensor gather(const Tensor& all, std::span<const std::size_t> rows) {
  Shape shape = all.shape;
  const std::size_t stride = all.size() / all.dim(0);
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(all.data() + rows[i] * stride, stride, out.data() + i * stride);
  }
  return out;
}

std::size_t count_correct(std::span<const double> p, std::span<const int> y) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hits += static_cast<std::size_t>((p[i] >= 0.5) == (y[i] == 1));
  return hits;
}

}  // namespace

std::string_view channel_name(Channel c) { return kChannelNames[static_cast<std::size_t>(c)]; }

Channel channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kChannelNames); ++i) {
    if (kChannelNames[i] == name) return static_cast<Channel>(i);
  }
  throw InvalidArgument("unknown channel: " + std::string(name));
}

std::string ChannelRecipe::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (i) s += ',';
    s += channel_name(channels[i]);
  }
  return s;
}

ChannelRecipe ChannelRecipe::parse(std::string_view names, bool incidence_normalize) {
  ChannelRecipe r;
  r.channels.clear();
  r.incidence_normalize = incidence_normalize;
  while (!names.empty()) {
    const auto comma = names.find(',');
    auto token = names.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    r.channels.push_back(channel_from_name(token));
    if (comma == std::string_view::npos) break;
    names.remove_prefix(comma + 1);
  }
  if (r.channels.empty()) throw InvalidArgument("channel recipe is empty");
  return r;
}

Standardization Standardization::fit(const Tensor& inputs) {
  if (inputs.rank() != 4 || inputs.dim(0) == 0) throw DimensionError("standardization: expected [N, C, H, W] input");
  const std::size_t n = inputs.dim(0), c = inputs.dim(1), hw = inputs.dim(2) * inputs.dim(3);
  Standardization s;
  s.mean.assign(c, 0.0);
  s.stddev.assign(c, 0.0);
  const auto count = static_cast<double>(n * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = inputs.data() + (i * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) sum += p[k];
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = inputs.data() + (i * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) ss += (p[k] - mean) * (p[k] - mean);
    }
    const double sd = std::sqrt(ss / count);
    s.mean[ch] = mean;
    s.stddev[ch] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardization::apply(Tensor& inputs) const {
  if (inputs.rank() != 4 || inputs.dim(1) != mean.size()) throw DimensionError("standardization: channel mismatch");
  const std::size_t n = inputs.dim(0), c = inputs.dim(1), hw = inputs.dim(2) * inputs.dim(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = inputs.data() + (i * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) p[k] = (p[k] - mean[ch]) / stddev[ch];
    }
  }
}

Tensor build_inputs(const SampleSet& set, const ChannelRecipe& recipe) {
  if (set.empty()) throw InvalidArgument("build_inputs: empty sample set");
  if (recipe.channels.empty()) throw InvalidArgument("build_inputs: empty channel recipe");
  const std::size_t h = set[0].hh.height(), w = set[0].hh.width(), c = recipe.channels.size();
  Tensor out({set.size(), c, h, w});
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& s = set[i];
    if (s.hh.height() != h || s.hh.width() != w) throw DimensionError("build_inputs: samples differ in size");
    ImagePlane hh = s.hh, hv = s.hv;
    if (recipe.incidence_normalize) {
      if (!s.inc_angle) throw InvalidArgument("build_inputs: sample " + s.id + " has no incidence angle; impute first");
      hh = normalize_incidence(hh, *s.inc_angle);
      hv = normalize_incidence(hv, *s.inc_angle);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const auto plane = channel_plane(recipe.channels[ch], hh, hv, recipe.smooth_sigma);
      std::copy(plane.values().begin(), plane.values().end(), out.data() + (i * c + ch) * h * w);
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  plateau().validate();
}

std::vector<double> predict_probabilities(const Network& net, const Tensor& inputs, std::size_t batch_size) {
  const std::size_t n = inputs.dim(0);
  std::vector<double> probs;
  probs.reserve(n);
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += batch_size) {
    rows.resize(std::min(batch_size, n - start));
    std::iota(rows.begin(), rows.end(), start);
    const auto out = forward(net, gather(inputs, rows), false, 0);
    probs.insert(probs.end(), out.values.begin(), out.values.end());
  }
  return probs;
}

std::vector<double> predict_cnn(const CnnModel& model, const SampleSet& set, std::size_t batch_size) {
  Tensor inputs = build_inputs(set, model.recipe);
  model.standardization.apply(inputs);
  return predict_probabilities(model.net, inputs, batch_size);
}

FitResult fit(Network net, const SampleSet& train, const SampleSet& val, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) throw InvalidArgument("fit: train and validation sets must be non-empty");
  const auto y_train = labels_of(train);
  const auto y_val = labels_of(val);

  Tensor x_train = build_inputs(train, cfg.recipe);
  Tensor x_val = build_inputs(val, cfg.recipe);
  const auto standardization = Standardization::fit(x_train);
  standardization.apply(x_train);
  standardization.apply(x_val);
  if (x_train.dim(1) != net.input[0]) throw DimensionError("fit: channel recipe does not match network input");

  net.reset_optimizer();
  PlateauScheduler scheduler(cfg.plateau());
  double lr = cfg.lr0;

  FitResult result;
  result.model.recipe = cfg.recipe;
  result.model.standardization = standardization;
  std::vector<Tensor> best_params = net.params;
  double best_val = std::numeric_limits<double>::infinity();

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::vector<int> y_batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, 0xe90c, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(cfg.batch_size, n - start));
      y_batch.clear();
      for (auto r : rows) y_batch.push_back(y_train[r]);
      const auto dropout_seed =
          derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + 0xd0, batch_index);
      const auto step = logloss_gradients(net, gather(x_train, rows), y_batch, true, dropout_seed);
      adam_step(net, step.grads, lr, cfg.adam);
      loss_sum += step.loss * static_cast<double>(rows.size());
      correct += count_correct(step.output.values, y_batch);
    }

    const auto p_val = predict_probabilities(net, x_val);
    EpochRecord rec;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    rec.val_loss = loss_logloss(p_val, y_val);
    rec.val_acc = metric_accuracy(p_val, y_val);
    rec.lr = lr;
    result.history.epochs.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best_params = net.params;
      result.history.best_epoch = static_cast<std::size_t>(epoch);
    }
    lr = scheduler.step(rec.val_loss);
  }

  net.params = std::move(best_params);
  net.reset_optimizer();
  result.model.net = std::move(net);
  return result;
}

PretrainResult pretrain_autoencoder(Network ae, const SampleSet& data, const PretrainConfig& cfg) {
  if (data.empty()) throw InvalidArgument("pretrain: empty sample set");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw InvalidArgument("pretrain: epochs and batch_size must be >= 1");
  Tensor x = build_inputs(data, cfg.recipe);
  const auto standardization = Standardization::fit(x);
  standardization.apply(x);
  if (x.dim(1) != ae.input[0]) throw DimensionError("pretrain: channel recipe does not match network input");
  if (ae.output_shape() != ae.input) throw DimensionError("pretrain: network output shape differs from its input");

  ae.reset_optimizer();
  PretrainResult result;
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, 0xae5f, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(cfg.batch_size, n - start));
      const Tensor batch = gather(x, rows);
      const auto step = mse_gradients(ae, batch, batch, true, 0);
      adam_step(ae, step.grads, cfg.lr, cfg.adam);
      loss_sum += step.loss * static_cast<double>(rows.size());
    }
    result.epoch_mse.push_back(loss_sum / static_cast<double>(n));
  }
  ae.reset_optimizer();
  result.autoencoder = {std::move(ae), cfg.recipe, standardization};
  return result;
}

double reconstruction_mse(const CnnModel& ae, const SampleSet& set, std::size_t batch_size) {
  Tensor x = build_inputs(set, ae.recipe);
  ae.standardization.apply(x);
  const std::size_t n = x.dim(0);
  double sum = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += batch_size) {
    rows.resize(std::min(batch_size, n - start));
    std::iota(rows.begin(), rows.end(), start);
    const Tensor batch = gather(x, rows);
    const Tensor out = forward(ae.net, batch, false, 0);
    sum += loss_mse(out.values, batch.values) * static_cast<double>(rows.size());
  }
  return sum / static_cast<double>(n);
}

void write_history_csv(std::ostream& out, const History& h) {
  out << "epoch,train_loss,val_loss,train_acc,val_acc,lr\n";
  char buf[256];
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const auto& r = h.epochs[e];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", e + 1, r.train_loss, r.val_loss,
                  r.train_acc, r.val_acc, r.lr);
    out << buf;
  }
}

}  // namespace icesar::nn
