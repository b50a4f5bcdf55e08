#include "icesar/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "icesar/errors.hpp"
#include "icesar/metrics.hpp"

namespace icesar {

using nlohmann::json;

namespace {

constexpr double kLeafClamp = 4.0;
constexpr double kMinGain = 1e-12;

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct TreeBuilder {
  const FeatureRows& x;
  std::span<const double> residuals;
  std::span<const double> hessians;
  const GbmParams& params;
  Tree tree;

  int build(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    SplitChoice split;
    if (depth < params.max_depth && rows.size() >= 2 * params.min_samples_leaf) {
      split = best_split(x, residuals, rows, params.min_samples_leaf);
    }
    if (!split.found) {
      double g = 0.0, h = 0.0;
      for (auto r : rows) {
        g += residuals[r];
        h += hessians[r];
      }
      double value = 0.0;
      if (h > 0.0) {
        value = std::clamp(g / h, -kLeafClamp, kLeafClamp);
      } else if (g != 0.0) {
        value = g > 0.0 ? kLeafClamp : -kLeafClamp;
      }
      tree.nodes[static_cast<std::size_t>(index)].value = value;
      return index;
    }

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int rr = build(std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rr;
    return index;
  }
};

void check_rows(const FeatureRows& x, std::size_t feature_count) {
  for (const auto& row : x) {
    if (row.size() != feature_count) throw DimensionError("gbm: feature row has wrong length");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("gbm: non-finite feature value");
    }
  }
}

}  // namespace

double Tree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[k].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    deepest = std::max(deepest, d[k]);
    if (!nodes[k].is_leaf()) {
      d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    }
  }
  return deepest;
}

void GbmParams::validate() const {
  if (n_trees < 1) throw InvalidArgument("gbm: n_trees must be >= 1");
  if (max_depth < 1) throw InvalidArgument("gbm: max_depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw InvalidArgument("gbm: shrinkage must lie in (0, 1]");
  if (min_samples_leaf < 1) throw InvalidArgument("gbm: min_samples_leaf must be >= 1");
}

SplitChoice best_split(const FeatureRows& x, std::span<const double> residuals, std::span<const std::size_t> rows,
                       std::size_t min_samples_leaf) {
  SplitChoice best;
  const std::size_t n = rows.size();
  if (n < 2 || x.empty()) return best;
  const std::size_t features = x[rows[0]].size();

  double total = 0.0;
  for (auto r : rows) total += residuals[r];
  const double base = total * total / static_cast<double>(n);

  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (std::size_t f = 0; f < features; ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += residuals[order[i]];
      const double lo = x[order[i]][f], hi = x[order[i + 1]][f];
      const std::size_t n_left = i + 1, n_right = n - n_left;
      if (lo == hi || n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                          right_sum * right_sum / static_cast<double>(n_right) - base;
      if (gain > kMinGain && (!best.found || gain > best.gain)) {
        double threshold = lo + (hi - lo) / 2.0;
        if (threshold >= hi) threshold = lo;
        best = {true, static_cast<int>(f), threshold, gain};
      }
    }
  }
  return best;
}

GbmModel fit_gbm(const FeatureRows& x, std::span<const int> y, const GbmParams& params, GbmTrace* trace) {
  params.validate();
  if (x.size() != y.size()) throw DimensionError("gbm: row and label counts differ");
  if (x.size() < 2) throw InvalidArgument("gbm: need at least 2 rows");
  const std::size_t features = x[0].size();
  if (features == 0) throw DimensionError("gbm: rows have no features");
  check_rows(x, features);

  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw LabelError("gbm: labels must be 0 or 1");
    positives += static_cast<std::size_t>(v);
  }
  if (positives == 0 || positives == y.size()) throw LabelError("gbm: both classes must be present");

  const std::size_t n = x.size();
  GbmModel model;
  model.shrinkage = params.shrinkage;
  model.feature_count = features;
  const double rate = std::clamp(static_cast<double>(positives) / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(rate / (1.0 - rate));

  std::vector<double> score(n, model.base_score), prob(n), residual(n), hessian(n);
  auto refresh = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = sigmoid(score[i]);
      residual[i] = static_cast<double>(y[i]) - prob[i];
      hessian[i] = prob[i] * (1.0 - prob[i]);
    }
  };
  refresh();
  if (trace) trace->train_logloss = {loss_logloss(prob, y)};

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < params.n_trees; ++t) {
    TreeBuilder builder{x, residual, hessian, params, {}};
    builder.build(all, 0);
    for (std::size_t i = 0; i < n; ++i) score[i] += model.shrinkage * builder.tree.predict(x[i]);
    model.trees.push_back(std::move(builder.tree));
    refresh();
    if (trace) trace->train_logloss.push_back(loss_logloss(prob, y));
  }
  if (trace) trace->train_probabilities = prob;
  return model;
}

double predict_gbm_row(const GbmModel& m, std::span<const double> x) {
  if (x.size() != m.feature_count) throw DimensionError("gbm: feature count mismatch");
  // Same accumulation order as training so training-row predictions match bitwise.
  double score = m.base_score;
  for (const auto& t : m.trees) score += m.shrinkage * t.predict(x);
  return sigmoid(score);
}

std::vector<double> predict_gbm(const GbmModel& m, const FeatureRows& x) {
  std::vector<double> p;
  p.reserve(x.size());
  for (const auto& row : x) p.push_back(predict_gbm_row(m, row));
  return p;
}

std::string serialize_gbm(const GbmModel& m) {
  json doc;
  doc["header"] = {{"version", GbmModel::kFormatVersion},
                   {"feature_count", m.feature_count},
                   {"shrinkage", m.shrinkage},
                   {"base_score", m.base_score}};
  json trees = json::array();
  for (const auto& t : m.trees) {
    json f = json::array(), th = json::array(), l = json::array(), r = json::array(), v = json::array();
    for (const auto& node : t.nodes) {
      f.push_back(node.feature);
      th.push_back(node.threshold);
      l.push_back(node.left);
      r.push_back(node.right);
      v.push_back(node.value);
    }
    trees.push_back({{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"value", v}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

GbmModel deserialize_gbm(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("gbm model: malformed JSON: ") + e.what());
  }
  try {
    const auto& h = doc.at("header");
    const int version = h.at("version").get<int>();
    if (version != GbmModel::kFormatVersion) {
      throw ParseError("gbm model: unsupported version " + std::to_string(version));
    }
    GbmModel m;
    m.feature_count = h.at("feature_count").get<std::size_t>();
    m.shrinkage = h.at("shrinkage").get<double>();
    m.base_score = h.at("base_score").get<double>();
    for (const auto& jt : doc.at("trees")) {
      const auto f = jt.at("feature").get<std::vector<int>>();
      const auto th = jt.at("threshold").get<std::vector<double>>();
      const auto l = jt.at("left").get<std::vector<int>>();
      const auto r = jt.at("right").get<std::vector<int>>();
      const auto v = jt.at("value").get<std::vector<double>>();
      const auto count = f.size();
      if (count == 0 || th.size() != count || l.size() != count || r.size() != count || v.size() != count) {
        throw ParseError("gbm model: inconsistent node arrays");
      }
      Tree t;
      for (std::size_t k = 0; k < count; ++k) {
        TreeNode node{f[k], th[k], l[k], r[k], v[k]};
        if (!node.is_leaf()) {
          const auto nodes = static_cast<int>(count);
          if (static_cast<std::size_t>(node.feature) >= m.feature_count || node.left <= static_cast<int>(k) ||
              node.right <= static_cast<int>(k) || node.left >= nodes || node.right >= nodes) {
            throw ParseError("gbm model: invalid node " + std::to_string(k));
          }
        }
        t.nodes.push_back(node);
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("gbm model: ") + e.what());
  }
}

}  // namespace icesar
