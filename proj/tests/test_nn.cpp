#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "icesar/errors.hpp"
#include "icesar/metrics.hpp"
#include "icesar/nn/checkpoint.hpp"
#include "icesar/nn/gradcheck.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/nn/optim.hpp"
#include "icesar/nn/train.hpp"
#include "test_support.hpp"

using namespace icesar;
using namespace icesar::nn;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = nd(rng);
  return t;
}

std::size_t closed_form_params(std::size_t ch, std::size_t side, std::array<std::size_t, 3> conv, std::size_t dense) {
  std::size_t total = 0, in = ch, s = side;
  for (auto out : conv) {
    total += out * in * 9 + out;
    in = out;
    s /= 2;
  }
  const std::size_t flat = in * s * s;
  return total + flat * dense + dense + dense + 1;
}

Network dense_net(std::size_t in, std::size_t hidden, std::uint64_t seed) {
  Network net;
  net.input = {in, 1, 1};
  net.layers = {Flatten{}, Dense{in, hidden, 0, 1}, Relu{}, Dense{hidden, 1, 2, 3}, Sigmoid{}};
  net.params = {random_tensor({hidden, in}, seed, 0.5), random_tensor({hidden}, seed + 1, 0.1),
                random_tensor({1, hidden}, seed + 2, 0.5), random_tensor({1}, seed + 3, 0.1)};
  net.reset_optimizer();
  return net;
}

std::vector<int> alternating(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

}  // namespace

TEST(Tensor, ValidatesSize) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_TRUE(t.all_finite());
  EXPECT_EQ(shape_string({2, 3}), "[2x3]");
}

TEST(Classifier, ShapeRangeAndParameterCount) {
  for (std::size_t ch : {1u, 3u}) {
    const auto net = build_classifier(ch, 1);
    EXPECT_EQ(net.output_shape(), (Shape{1}));
    EXPECT_EQ(net.parameter_count(), closed_form_params(ch, 75, {16, 32, 64}, 64));
    const auto out = forward(net, random_tensor({4, ch, 75, 75}, 2), false, 0);
    ASSERT_EQ(out.shape, (Shape{4, 1}));
    for (double p : out.values) {
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
  }
  EXPECT_EQ(build_classifier(3, 0).parameter_count(), 355489u);
}

TEST(Classifier, SeedDeterminism) {
  EXPECT_EQ(build_classifier(3, 5), build_classifier(3, 5));
  EXPECT_NE(build_classifier(3, 5).params, build_classifier(3, 6).params);
  const auto net = build_classifier(2, 5);
  for (const auto& layer : net.layers) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      for (double b : net.params[c->bias].values) EXPECT_EQ(b, 0.0);
    }
  }
}

TEST(Classifier, HeUniformBounds) {
  const auto net = build_classifier(3, 9);
  for (const auto& layer : net.layers) {
    std::size_t fan_in = 0, w = 0;
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      fan_in = c->in_ch * 9;
      w = c->weight;
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      fan_in = d->in;
      w = d->weight;
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / double(fan_in));
    double max_abs = 0;
    for (double v : net.params[w].values) max_abs = std::max(max_abs, std::abs(v));
    EXPECT_LE(max_abs, limit);
    EXPECT_GT(max_abs, 0.5 * limit);
  }
}

TEST(Forward, ZeroInputGivesHalf) {
  const auto net = build_classifier(ArchSpec::tiny(2), 3);
  const auto out = forward(net, Tensor({3, 2, 16, 16}, 0.0), false, 0);
  for (double p : out.values) EXPECT_EQ(p, 0.5);
}

TEST(Forward, DropoutOnlyInTraining) {
  auto spec = ArchSpec::tiny(2);
  const auto x = random_tensor({4, 2, 16, 16}, 1);
  spec.dropout = 0.0;
  const auto a = build_classifier(spec, 3);
  EXPECT_EQ(forward(a, x, true, 11), forward(a, x, false, 0));
  spec.dropout = 0.5;
  const auto b = build_classifier(spec, 3);
  EXPECT_NE(forward(b, x, true, 11), forward(b, x, false, 0));
  EXPECT_EQ(forward(b, x, true, 11), forward(b, x, true, 11));
  EXPECT_EQ(forward(b, x, false, 1), forward(b, x, false, 2));
}

TEST(Forward, ConvMatchesNestedLoops) {
  Network net;
  net.input = {1, 5, 5};
  net.layers = {Conv2d{1, 2, 0, 1}};
  net.params = {random_tensor({2, 1, 3, 3}, 4), Tensor({2}, std::vector<double>{0.25, -0.5})};
  Tensor x({1, 1, 5, 5});
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 5; ++c) x[r * 5 + c] = 0.3 * double(r) - 0.7 * double(c) + 0.1 * double(r * c);
  }
  const auto out = forward(net, x, false, 0);
  ASSERT_EQ(out.shape, (Shape{1, 2, 5, 5}));
  for (std::size_t o = 0; o < 2; ++o) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        double acc = net.params[1][o];
        for (int i = -1; i <= 1; ++i) {
          for (int j = -1; j <= 1; ++j) {
            const int rr = r + i, cc = c + j;
            if (rr < 0 || rr >= 5 || cc < 0 || cc >= 5) continue;
            acc += net.params[0][o * 9 + std::size_t((i + 1) * 3 + (j + 1))] * x[std::size_t(rr * 5 + cc)];
          }
        }
        EXPECT_NEAR(out[o * 25 + std::size_t(r * 5 + c)], acc, 1e-12);
      }
    }
  }
}

TEST(Forward, PoolAndUpsampleShapes) {
  Network net;
  net.input = {1, 5, 5};
  net.layers = {MaxPool2{}, Upsample2{5, 5}};
  EXPECT_EQ(net.output_shape(), (Shape{1, 5, 5}));
  Tensor x({1, 1, 5, 5});
  for (std::size_t i = 0; i < 25; ++i) x[i] = double(i);
  const auto out = forward(net, x, false, 0);
  EXPECT_EQ(out[0], 6.0);
  EXPECT_EQ(out[24], 18.0);
  EXPECT_THROW(forward(net, Tensor({1, 2, 5, 5}), false, 0), DimensionError);
}

TEST(Forward, EvaluationIsPure) {
  const auto net = build_classifier(ArchSpec::tiny(3), 7);
  const auto x = random_tensor({5, 3, 16, 16}, 8);
  EXPECT_EQ(forward(net, x, false, 0), forward(net, x, false, 0));
}

TEST(Loss, LoglossValues) {
  EXPECT_NEAR(loss_logloss(std::vector<double>{0.5}, std::vector<int>{1}), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_logloss(std::vector<double>{0.9}, std::vector<int>{1}), 0.105361, 1e-6);
  EXPECT_LE(loss_logloss(std::vector<double>{1.0, 0.0}, std::vector<int>{1, 0}), 3.46e-14);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p{u(rng), u(rng)};
    EXPECT_GE(loss_logloss(p, std::vector<int>{0, 1}), 0.0);
  }
}

TEST(Backward, ZeroGradientAtOptimum) {
  Network net;
  net.input = {1, 1, 1};
  net.layers = {Flatten{}, Dense{1, 1, 0, 1}, Sigmoid{}};
  net.params = {Tensor({1, 1}, 0.0), Tensor({1}, 0.0)};
  net.reset_optimizer();
  // Identical inputs with balanced labels: p = 0.5 is the empirical rate.
  const Tensor x({4, 1, 1, 1}, 1.0);
  const auto lg = logloss_gradients(net, x, std::vector<int>{1, 0, 0, 1}, false, 0);
  for (const auto& g : lg.grads) {
    for (double v : g.values) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(Backward, DuplicatedBatchSameGradient) {
  const auto net = build_classifier(ArchSpec::tiny(2), 1);
  const auto x = random_tensor({3, 2, 16, 16}, 2);
  Tensor xx({6, 2, 16, 16});
  std::copy(x.values.begin(), x.values.end(), xx.values.begin());
  std::copy(x.values.begin(), x.values.end(), xx.values.begin() + long(x.size()));
  const std::vector<int> y{1, 0, 1}, yy{1, 0, 1, 1, 0, 1};
  const auto a = logloss_gradients(net, x, y, false, 0);
  const auto b = logloss_gradients(net, xx, yy, false, 0);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  for (std::size_t k = 0; k < a.grads.size(); ++k) {
    for (std::size_t i = 0; i < a.grads[k].size(); ++i) {
      EXPECT_NEAR(a.grads[k][i], b.grads[k][i], 1e-12 * std::max(1.0, std::abs(a.grads[k][i])));
    }
  }
}

TEST(GradCheck, TinyClassifier) {
  for (std::uint64_t seed : {1ull, 2ull}) {
    const auto net = build_classifier(ArchSpec::tiny(3), seed);
    const auto x = random_tensor({4, 3, 16, 16}, seed + 10);
    GradCheckOptions opt;
    opt.seed = seed;
    const auto r = gradient_check(net, x, alternating(4), opt);
    EXPECT_GE(r.checked, 200u);
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}

TEST(GradCheck, TinyAutoencoder) {
  const auto ae = build_autoencoder(ArchSpec::tiny(2), 3);
  EXPECT_EQ(ae.output_shape(), ae.input);
  const auto x = random_tensor({3, 2, 16, 16}, 4);
  const auto r = gradient_check_mse(ae, x, x);
  EXPECT_GE(r.checked, 200u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradCheck, DenseOnly) {
  const auto net = dense_net(6, 5, 3);
  const auto x = random_tensor({8, 6, 1, 1}, 5);
  const auto r = gradient_check(net, x, alternating(8));
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheck, PlainTwoPointAtSmallStep) {
  const auto net = build_classifier(ArchSpec::tiny(3), 4);
  const auto x = random_tensor({4, 3, 16, 16}, 12);
  GradCheckOptions opt;
  opt.step = 1e-6;
  opt.stencil = Stencil::two_point;
  opt.skip_kinks = false;
  const auto r = gradient_check(net, x, alternating(4), opt);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_EQ(r.checked, 200u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradCheck, KinkCrossingsAreCountedNotCompared) {
  const auto net = build_classifier(ArchSpec::tiny(3), 1);
  const auto x = random_tensor({4, 3, 16, 16}, 11);
  GradCheckOptions opt;
  opt.stencil = Stencil::two_point;
  opt.skip_kinks = false;
  // Across a kink the two-point difference is not a derivative.
  EXPECT_GT(gradient_check(net, x, alternating(4), opt).max_relative_error, 1e-4);
  opt.skip_kinks = true;
  const auto r = gradient_check(net, x, alternating(4), opt);
  EXPECT_GT(r.skipped, 0u);
  EXPECT_EQ(r.checked, 200u);
}

TEST(GradCheck, DetectsCorruptedConvBackward) {
  const auto net = build_classifier(ArchSpec::tiny(3), 1);
  const auto x = random_tensor({4, 3, 16, 16}, 11);
  GradCheckOptions opt;
  opt.backward.corrupt_conv_input_gradient = true;
  EXPECT_GT(gradient_check(net, x, alternating(4), opt).max_relative_error, 1e-2);
}

TEST(Autoencoder, ReferenceShapes) {
  const auto ae = build_autoencoder(3, 1);
  EXPECT_EQ(ae.output_shape(), (Shape{3, 75, 75}));
  const auto out = forward(ae, random_tensor({2, 3, 75, 75}, 1), false, 0);
  EXPECT_EQ(out.shape, (Shape{2, 3, 75, 75}));
}

TEST(Transfer, CopiesEncoderOnly) {
  const auto ae = build_autoencoder(3, 1);
  const auto clf = build_classifier(3, 2);
  const auto out = transfer_encoder(ae, clf);
  const auto ae_conv = conv_layers(ae), clf_conv = conv_layers(out);
  ASSERT_EQ(clf_conv.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& a = std::get<Conv2d>(ae.layers[ae_conv[k]]);
    const auto& c = std::get<Conv2d>(out.layers[clf_conv[k]]);
    EXPECT_EQ(out.params[c.weight], ae.params[a.weight]);
    EXPECT_EQ(out.params[c.bias], ae.params[a.bias]);
  }
  for (const auto& layer : out.layers) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
      EXPECT_EQ(out.params[d->weight], clf.params[d->weight]);
      EXPECT_EQ(out.params[d->bias], clf.params[d->bias]);
    }
  }
  EXPECT_EQ(out.adam.step, 0u);
}

TEST(Transfer, MismatchThrowsAndLeavesClassifier) {
  const auto ae = build_autoencoder(2, 1);
  const auto clf = build_classifier(3, 2);
  const auto copy = clf;
  EXPECT_THROW(transfer_encoder(ae, clf), DimensionError);
  EXPECT_EQ(clf, copy);
}

TEST(Adam, FirstStepClosedForm) {
  std::vector<double> p{0.5}, m{0}, v{0};
  const std::vector<double> g{1.0};
  adam_update(p, g, m, v, 1, 0.001);
  EXPECT_NEAR(0.5 - p[0], 0.001 / (1 + 1e-8), 1e-12);
}

TEST(Adam, ZeroGradientAndSignProperty) {
  std::vector<double> p{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
  adam_update(p, std::vector<double>{0.0, 0.0}, m, v, 1, 0.01);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));

  const auto g = random_tensor({1000}, 3, 5.0);
  std::vector<double> q(1000, 0.0), m2(1000, 0.0), v2(1000, 0.0);
  adam_update(q, g.values, m2, v2, 1, 0.001);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (g[i] != 0.0) {
      EXPECT_EQ(std::signbit(q[i]), g[i] > 0) << i;
    }
  }
}

TEST(Adam, MatchesHandRecurrence) {
  std::vector<double> p{0.3}, m{0}, v{0};
  double hp = 0.3, hm = 0, hv = 0;
  const double gs[] = {0.5, -1.5, 2.0, 0.1, -0.3};
  for (int t = 1; t <= 5; ++t) {
    const double g = gs[t - 1];
    adam_update(p, std::vector<double>{g}, m, v, std::uint64_t(t), 0.01);
    hm = 0.9 * hm + 0.1 * g;
    hv = 0.999 * hv + 0.001 * g * g;
    const double mh = hm / (1 - std::pow(0.9, t)), vh = hv / (1 - std::pow(0.999, t));
    hp -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p[0], hp, 1e-14);
  }
}

TEST(Adam, NonFiniteGradientRejectedBeforeMutation) {
  std::vector<double> p{1.0, 2.0}, m{0.1, 0.1}, v{0.2, 0.2};
  EXPECT_THROW(adam_update(p, std::vector<double>{0.5, INFINITY}, m, v, 3, 0.1), InvalidArgument);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(m, (std::vector<double>{0.1, 0.1}));
}

TEST(Adam, NetworkStepCountsSteps) {
  auto net = dense_net(3, 2, 1);
  const auto before = net.params;
  const auto lg = logloss_gradients(net, random_tensor({4, 3, 1, 1}, 2), alternating(4), false, 0);
  adam_step(net, lg.grads, 1e-3);
  adam_step(net, lg.grads, 1e-3);
  EXPECT_EQ(net.adam.step, 2u);
  EXPECT_NE(net.params, before);
}

TEST(Plateau, ConstantWhileImproving) {
  std::vector<double> losses;
  for (int i = 0; i < 20; ++i) losses.push_back(1.0 - 0.01 * i);
  for (double lr : plateau_schedule(losses, {})) EXPECT_EQ(lr, 1e-3);
}

TEST(Plateau, DropsAtPatienceExpiry) {
  const std::vector<double> losses{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  const auto lr = plateau_schedule(losses, {});
  for (int k = 0; k < 5; ++k) EXPECT_EQ(lr[std::size_t(k)], 1e-3) << k;
  EXPECT_DOUBLE_EQ(lr[5], 1e-4);
  EXPECT_DOUBLE_EQ(lr[6], 1e-4);
  // An improvement of exactly the threshold does not count.
  const std::vector<double> tiny{1.0, 1.0 - 1e-7, 1.0 - 2e-7, 1.0 - 3e-7, 1.0 - 4e-7, 1.0 - 5e-7};
  EXPECT_DOUBLE_EQ(plateau_schedule(tiny, {}).back(), 1e-4);
}

TEST(Plateau, NeverBelowMinLr) {
  std::vector<double> losses(100, 2.0);
  const auto lr = plateau_schedule(losses, {});
  for (std::size_t k = 1; k < lr.size(); ++k) {
    EXPECT_LE(lr[k], lr[k - 1]);
    EXPECT_GE(lr[k], 1e-6);
  }
  EXPECT_EQ(lr.back(), 1e-6);
  PlateauConfig bad;
  bad.factor = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Recipe, ParseAndInputs) {
  const auto r = ChannelRecipe::parse("hh, hv,diff,hh_laplacian");
  EXPECT_EQ(r.to_string(), "hh,hv,diff,hh_laplacian");
  EXPECT_THROW(ChannelRecipe::parse("hh,bogus"), InvalidArgument);
  auto set = icesar::testing::small_synth(3, 1, 16);
  const auto x = build_inputs(set, r);
  EXPECT_EQ(x.shape, (Shape{3, 4, 16, 16}));
  std::vector<SarSample> v = set.samples();
  v[1].inc_angle.reset();
  EXPECT_THROW(build_inputs(SampleSet(v, Provenance::real), ChannelRecipe{}), InvalidArgument);
  auto plain = ChannelRecipe{};
  plain.incidence_normalize = false;
  EXPECT_NO_THROW(build_inputs(SampleSet(v, Provenance::real), plain));
}

TEST(Standardization, TrainStatsAreUnit) {
  const auto set = icesar::testing::small_synth(20, 4, 16);
  auto x = build_inputs(set, ChannelRecipe{});
  const auto s = Standardization::fit(x);
  s.apply(x);
  const std::size_t n = x.dim(0), c = x.dim(1), hw = 256;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < hw; ++k) sum += x[(i * c + ch) * hw + k];
    }
    const double mean = sum / double(n * hw);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < hw; ++k) sq += std::pow(x[(i * c + ch) * hw + k] - mean, 2);
    }
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(std::sqrt(sq / double(n * hw)), 1.0, 1e-10);
  }
}

namespace {

TrainConfig quick_config(int epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Fit, SmokeAndDeterminism) {
  const auto set = icesar::testing::small_synth(16, 1, 16);
  const auto [train, val] = split_train_validation(set, 0.5, 1);
  const auto cfg = quick_config(2, 3);
  const auto a = fit(build_classifier(ArchSpec::tiny(3), 1), train, val, cfg);
  ASSERT_EQ(a.history.epochs.size(), 2u);
  for (const auto& e : a.history.epochs) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    EXPECT_TRUE(std::isfinite(e.val_loss));
    EXPECT_EQ(e.lr, 1e-3);
  }
  const auto b = fit(build_classifier(ArchSpec::tiny(3), 1), train, val, cfg);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model, b.model);
  EXPECT_THROW(fit(build_classifier(ArchSpec::tiny(3), 1), SampleSet{}, val, cfg), InvalidArgument);
}

TEST(Fit, RestoresBestEpoch) {
  const auto set = icesar::testing::small_synth(40, 2, 16);
  const auto [train, val] = split_train_validation(set, 0.25, 1);
  const auto r = fit(build_classifier(ArchSpec::tiny(3), 2), train, val, quick_config(6, 1));
  const auto& best = r.history.best();
  for (const auto& e : r.history.epochs) EXPECT_GE(e.val_loss, best.val_loss);
  const auto p = predict_cnn(r.model, val);
  EXPECT_NEAR(loss_logloss(p, labels_of(val)), best.val_loss, 1e-12);
}

TEST(Fit, SeparableSyntheticReachesNinetyPercent) {
  SynthConfig sc;
  sc.n_samples = 400;
  sc.seed = 11;
  sc.side = 24;
  const auto [train, val] = split_train_validation(synth_dataset(sc), 0.2, 11);
  ArchSpec spec{3, 24, 24, {8, 16, 16}, 16, 0.3};
  auto cfg = quick_config(8, 11);
  cfg.batch_size = 16;
  const auto r = fit(build_classifier(spec, 11), train, val, cfg);
  EXPECT_GE(r.history.best().val_acc, 0.9);
  EXPECT_GE(metric_accuracy(predict_cnn(r.model, val), labels_of(val)), 0.9);
  for (std::size_t k = 1; k < r.history.epochs.size(); ++k) {
    EXPECT_LE(r.history.epochs[k].lr, r.history.epochs[k - 1].lr);
  }
}

TEST(Pretrain, RunsAndReconstructs) {
  const auto set = icesar::testing::small_synth(12, 3, 16);
  PretrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  const auto r = pretrain_autoencoder(build_autoencoder(ArchSpec::tiny(3), 1), set, cfg);
  ASSERT_EQ(r.epoch_mse.size(), 3u);
  for (double m : r.epoch_mse) EXPECT_TRUE(std::isfinite(m));
  EXPECT_TRUE(std::isfinite(reconstruction_mse(r.autoencoder, set)));
  EXPECT_THROW(pretrain_autoencoder(build_classifier(ArchSpec::tiny(3), 1), set, cfg), DimensionError);
}

TEST(Checkpoint, RoundTrip) {
  const auto set = icesar::testing::small_synth(12, 5, 16);
  const auto [train, val] = split_train_validation(set, 0.5, 1);
  const auto r = fit(build_classifier(ArchSpec::tiny(3), 1), train, val, quick_config(1, 1));
  const auto bytes = serialize_model(r.model);
  std::string kind;
  const auto back = deserialize_model(bytes, &kind);
  EXPECT_EQ(kind, "classifier");
  EXPECT_EQ(back, r.model);
  EXPECT_EQ(predict_cnn(back, val), predict_cnn(r.model, val));
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 100)), ParseError);
  EXPECT_THROW(deserialize_model(R"({"version":2})"), ParseError);
}

TEST(History, CsvHeader) {
  History h;
  h.epochs.push_back({0.5, 0.6, 0.7, 0.8, 1e-3});
  std::ostringstream out;
  write_history_csv(out, h);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,train_loss,val_loss,train_acc,val_acc,lr");
  EXPECT_NE(out.str().find("\n1,0.5,"), std::string::npos);
}
