#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "icesar/ensemble.hpp"
#include "icesar/errors.hpp"
#include "test_support.hpp"

using namespace icesar;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<int> balanced_labels(std::size_t n, std::size_t positives) {
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < positives; ++i) y[i * n / positives] = 1;
  return y;
}

// Member that looks up the true label of every id it is asked about.
Member cheating_member(const SampleSet& truth) {
  std::map<std::string, int> label;
  for (const auto& s : truth.samples()) label[s.id] = static_cast<int>(*s.label);
  return {"cheat", [label](const SampleSet&, const SampleSet& predict) {
            std::vector<double> p;
            for (const auto& s : predict.samples()) p.push_back(double(label.at(s.id)));
            return p;
          }};
}

Member recording_member(std::map<std::string, int>* hits, std::vector<std::string>* leaks) {
  return {"record", [hits, leaks](const SampleSet& train, const SampleSet& predict) {
            std::set<std::string> seen;
            for (const auto& s : train.samples()) seen.insert(s.id);
            for (const auto& s : predict.samples()) {
              ++(*hits)[s.id];
              if (seen.count(s.id) || s.label) leaks->push_back(s.id);
            }
            return std::vector<double>(predict.size(), 0.5);
          }};
}

double mean_logloss_of(const std::vector<double>& p, const std::vector<int>& y) { return loss_logloss(p, y); }

}  // namespace

TEST(Folds, StratifiedAndDeterministic) {
  const auto y = balanced_labels(100, 37);
  const auto f = stratified_folds(y, 5, 3);
  EXPECT_EQ(f, stratified_folds(y, 5, 3));
  EXPECT_NE(f, stratified_folds(y, 5, 4));
  for (int k = 0; k < 5; ++k) {
    std::size_t n = 0, pos = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (f[i] == k) {
        ++n;
        pos += std::size_t(y[i]);
      }
    }
    EXPECT_EQ(n, 20u);
    EXPECT_NEAR(double(pos), 37.0 / 5.0, 1.0);
  }
  EXPECT_THROW(stratified_folds(y, 1, 0), InvalidArgument);
  EXPECT_THROW(stratified_folds(std::vector<int>{0, 2}, 2, 0), LabelError);
}

TEST(Oof, EverySamplePredictedOnceWithoutLeakage) {
  const auto set = icesar::testing::small_synth(100, 2, 16);
  std::map<std::string, int> hits;
  std::vector<std::string> leaks;
  const std::vector<Member> members{recording_member(&hits, &leaks)};
  const auto oof = oof_predictions(set, members, 5, 7);
  EXPECT_EQ(oof.rows(), 100u);
  EXPECT_EQ(hits.size(), 100u);
  for (const auto& [id, n] : hits) EXPECT_EQ(n, 1) << id;
  EXPECT_TRUE(leaks.empty());
  EXPECT_EQ(oof.labels, labels_of(set));
  EXPECT_EQ(oof.fold, stratified_folds(labels_of(set), 5, 7));
}

TEST(Oof, CheatingMemberReproducesLabels) {
  const auto set = icesar::testing::small_synth(60, 3, 16);
  const std::vector<Member> members{cheating_member(set)};
  const auto oof = oof_predictions(set, members, 5, 1);
  ASSERT_EQ(oof.columns.size(), 1u);
  for (std::size_t i = 0; i < oof.rows(); ++i) EXPECT_EQ(oof.columns[0][i], double(oof.labels[i]));
}

TEST(Oof, Errors) {
  const auto set = icesar::testing::small_synth(20, 3, 16);
  const std::vector<Member> none;
  EXPECT_THROW(oof_predictions(set, none, 5, 1), InvalidArgument);
  const std::vector<Member> members{cheating_member(set)};
  // 10 per class cannot fill 11 folds with both classes.
  EXPECT_THROW(oof_predictions(set, members, 11, 1), LabelError);
  std::vector<SarSample> v = set.samples();
  v[0].label.reset();
  EXPECT_THROW(oof_predictions(SampleSet(v, Provenance::real), members, 5, 1), LabelError);
  const std::vector<Member> short_member{{"short", [](const SampleSet&, const SampleSet&) {
                                            return std::vector<double>{0.5};
                                          }}};
  EXPECT_THROW(oof_predictions(set, short_member, 5, 1), DimensionError);
}

TEST(Oof, GbmMemberRuns) {
  const auto set = icesar::testing::small_synth(60, 5, 24);
  GbmParams params;
  params.n_trees = 20;
  const std::vector<Member> members{gbm_member(params)};
  const auto oof = oof_predictions(set, members, 3, 2);
  EXPECT_EQ(oof.members, (std::vector<std::string>{"gbm"}));
  for (double p : oof.columns[0]) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Stacker, NearPerfectMemberDominates) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const auto y = balanced_labels(200, 90);
  std::vector<double> cheat, noise;
  for (int v : y) {
    cheat.push_back(v ? 1.0 - 1e-4 : 1e-4);
    noise.push_back(u(rng));
  }
  const std::vector<std::vector<double>> cols{noise, cheat};
  const auto s = fit_stacker(cols, y);
  EXPECT_LT(s.gradient_norm, 1e-8);
  EXPECT_LE(mean_logloss_of(predict_stacker(s, cols), y), mean_logloss_of(cheat, y));
}

TEST(Stacker, IdenticalMembersGetSymmetricWeights) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> p;
  std::vector<int> y;
  for (int i = 0; i < 150; ++i) {
    p.push_back(u(rng));
    y.push_back(coin(rng) ? 1 : 0);
  }
  const auto s = fit_stacker(std::vector<std::vector<double>>{p, p}, y);
  ASSERT_EQ(s.weights.size(), 2u);
  EXPECT_LT(std::abs(s.weights[0] - s.weights[1]), 1e-6);
}

TEST(Stacker, CalibratedSingleMemberIsNotWorse) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::vector<double> p;
    std::vector<int> y;
    for (int i = 0; i < 300; ++i) {
      p.push_back(u(rng));
      y.push_back(std::bernoulli_distribution(p.back())(rng) ? 1 : 0);
    }
    if (std::count(y.begin(), y.end(), 1) == 0) continue;
    const std::vector<std::vector<double>> cols{p};
    const auto s = fit_stacker(cols, y);
    EXPECT_LE(mean_logloss_of(predict_stacker(s, cols), y), mean_logloss_of(p, y) + 1e-9) << seed;
  }
}

TEST(Stacker, ConstantColumnAllowedErrorsRejected) {
  const auto y = balanced_labels(40, 10);
  const std::vector<std::vector<double>> constant{std::vector<double>(40, 0.3)};
  const auto s = fit_stacker(constant, y);
  EXPECT_TRUE(std::isfinite(s.bias));
  const auto p = predict_stacker(s, constant);
  EXPECT_NEAR(p[0], 0.25, 1e-6);
  EXPECT_THROW(fit_stacker(constant, std::vector<int>(40, 1)), LabelError);
  auto bad = constant;
  bad[0][3] = NAN;
  EXPECT_THROW(fit_stacker(bad, y), InvalidArgument);
  EXPECT_THROW(fit_stacker(constant, balanced_labels(39, 10)), DimensionError);
}

TEST(PredictStacker, HandExamples) {
  const PredictionSet a{{"a", "b"}, {0.9, 0.2}}, b{{"a", "b"}, {0.5, 0.5}};
  Stacker zero{{0.0, 0.0}, 0.0};
  const std::vector<PredictionSet> both{a, b};
  for (double p : predict_stacker(zero, both).probs) EXPECT_EQ(p, 0.5);
  Stacker ones{{1.0, 1.0}, 0.0};
  const auto out = predict_stacker(ones, both);
  EXPECT_NEAR(out.probs[0], 0.9, 1e-12);
  EXPECT_NEAR(out.probs[1], 0.2, 1e-12);
  EXPECT_EQ(out.ids, a.ids);
  Stacker identity{{1.0}, 0.0};
  const std::vector<PredictionSet> single{PredictionSet{{"x", "y"}, {0.0, 0.37}}};
  const auto id = predict_stacker(identity, single);
  EXPECT_EQ(id.probs[0], 1e-15);
  EXPECT_NEAR(id.probs[1], 0.37, 1e-12);
  EXPECT_THROW(predict_stacker(identity, both), DimensionError);
  const std::vector<PredictionSet> shuffled{a, PredictionSet{{"b", "a"}, {0.5, 0.5}}};
  EXPECT_THROW(predict_stacker(ones, shuffled), DimensionError);
  EXPECT_NEAR(sigmoid(logit_clamped(0.9)), 0.9, 1e-15);
}

TEST(Blend, Examples) {
  const PredictionSet a{{"a", "b"}, {0.2, 0.9}}, b{{"a", "b"}, {0.8, 0.9}};
  const std::vector<PredictionSet> ab{a, b};
  const auto m = blend(ab, BlendMode::mean);
  EXPECT_DOUBLE_EQ(m.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(m.probs[1], 0.9);
  const auto lm = blend(ab, BlendMode::logit_mean);
  EXPECT_NEAR(lm.probs[0], 0.5, 1e-15);
  EXPECT_NEAR(lm.probs[1], 0.9, 1e-12);
  EXPECT_EQ(blend(ab, BlendMode::weights, std::vector<double>{1.0, 0.0}).probs, a.probs);
  EXPECT_THROW(blend(ab, BlendMode::weights, std::vector<double>{0.7, 0.7}), InvalidArgument);
  EXPECT_THROW(blend(ab, BlendMode::weights, std::vector<double>{1.5, -0.5}), InvalidArgument);
  EXPECT_THROW(blend(ab, BlendMode::weights, std::vector<double>{1.0}), DimensionError);
  EXPECT_EQ(blend_mode_from_name("logit_mean"), BlendMode::logit_mean);
  EXPECT_THROW(blend_mode_from_name("rank"), InvalidArgument);
}

TEST(Blend, AlignsByIdAndRejectsMismatch) {
  const PredictionSet a{{"a", "b"}, {0.2, 0.4}}, b{{"b", "a"}, {0.6, 0.8}};
  const std::vector<PredictionSet> ab{a, b};
  const auto m = blend(ab, BlendMode::mean);
  EXPECT_EQ(m.ids, a.ids);
  EXPECT_DOUBLE_EQ(m.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(m.probs[1], 0.5);
  const std::vector<PredictionSet> bad{a, PredictionSet{{"a", "c"}, {0.1, 0.2}}};
  EXPECT_THROW(blend(bad, BlendMode::mean), DimensionError);
}

TEST(Blend, MeanWithinMemberRange) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PredictionSet> preds(4);
    for (auto& p : preds) {
      for (int i = 0; i < 10; ++i) {
        p.ids.push_back("id" + std::to_string(i));
        p.probs.push_back(u(rng));
      }
    }
    const auto m = blend(preds, BlendMode::mean);
    for (std::size_t i = 0; i < 10; ++i) {
      double lo = 1, hi = 0;
      for (const auto& p : preds) {
        lo = std::min(lo, p.probs[i]);
        hi = std::max(hi, p.probs[i]);
      }
      EXPECT_GE(m.probs[i], lo);
      EXPECT_LE(m.probs[i], hi);
    }
  }
}

TEST(Audit, OofCsvAndStackerJsonRoundTrip) {
  OofMatrix oof;
  oof.ids = {"a", "b", "c"};
  oof.members = {"gbm", "cnn"};
  oof.columns = {{0.1, 0.2, 1.0 / 3.0}, {0.9, 1e-17, 0.5}};
  oof.fold = {0, 1, 0};
  oof.labels = {0, 1, 1};
  std::stringstream ss;
  write_oof_csv(ss, oof);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "id,fold,is_iceberg,gbm,cnn");
  const auto back = read_oof_csv(ss);
  EXPECT_EQ(back.ids, oof.ids);
  EXPECT_EQ(back.members, oof.members);
  EXPECT_EQ(back.columns, oof.columns);
  EXPECT_EQ(back.fold, oof.fold);
  EXPECT_EQ(back.labels, oof.labels);

  const auto s = fit_stacker(oof, oof.labels, StackerOptions{50, 1e-8});
  const auto text = serialize_stacker(s, oof.members);
  const auto t = deserialize_stacker(text);
  EXPECT_EQ(t.weights, s.weights);
  EXPECT_EQ(t.bias, s.bias);
  EXPECT_EQ(t.iterations, s.iterations);
  EXPECT_THROW(deserialize_stacker("{}"), ParseError);
  std::istringstream bad("id,fold\nx,1\n");
  EXPECT_THROW(read_oof_csv(bad), ParseError);
}
