#include "icesar/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <json.hpp>

#include "icesar/errors.hpp"
#include "icesar/rng.hpp"
#include "icesar/sar_features.hpp"

namespace icesar {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

SampleSet subset(const SampleSet& set, std::span<const std::size_t> rows) {
  std::vector<SarSample> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(set[r]);
  return SampleSet(std::move(out), set.provenance());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Member gbm_member(const GbmParams& params, std::string name) {
  params.validate();
  return {std::move(name), [params](const SampleSet& train, const SampleSet& predict) {
            const double mean_angle = impute_incidence(train).second;
            const auto model = fit_gbm(feature_rows(train, mean_angle), labels_of(train), params);
            return predict_gbm(model, feature_rows(predict, mean_angle));
          }};
}

Member cnn_member(const CnnMemberConfig& cfg, std::string name) {
  cfg.train.validate();
  if (!(cfg.val_ratio > 0.0 && cfg.val_ratio < 1.0)) throw InvalidArgument("cnn member: val_ratio must lie in (0, 1)");
  if (cfg.arch.input_ch != cfg.train.recipe.channels.size()) {
    throw DimensionError("cnn member: architecture input channels differ from the recipe");
  }
  return {std::move(name), [cfg](const SampleSet& train, const SampleSet& predict) {
            const auto [imputed, mean_angle] = impute_incidence(train);
            const auto [tr, va] = split_train_validation(imputed, cfg.val_ratio, cfg.train.seed);
            auto result = nn::fit(nn::build_classifier(cfg.arch, cfg.train.seed), tr, va, cfg.train);
            return nn::predict_cnn(result.model, impute_incidence_with(predict, mean_angle));
          }};
}

std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k_folds must be >= 2");
  std::vector<int> fold(y.size(), -1);
  std::size_t dealt = 0;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != 0 && y[i] != 1) throw LabelError("fold assignment: labels must be 0 or 1");
      if (y[i] == cls) rows.push_back(i);
    }
    Rng rng(derive_seed(seed, 0xf01d, static_cast<std::uint64_t>(cls)));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) fold[r] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return fold;
}

OofMatrix oof_predictions(const SampleSet& set, std::span<const Member> members, int k, std::uint64_t seed) {
  if (!set.labeled()) throw LabelError("oof: set must be labeled");
  if (members.empty()) throw InvalidArgument("oof: no members");
  OofMatrix oof;
  oof.labels = labels_of(set);
  oof.fold = stratified_folds(oof.labels, k, seed);
  for (int f = 0; f < k; ++f) {
    bool has[2] = {false, false};
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (oof.fold[i] == f) has[oof.labels[i]] = true;
    }
    if (!has[0] || !has[1]) throw LabelError("oof: fold " + std::to_string(f) + " contains a single class");
  }
  for (const auto& s : set.samples()) oof.ids.push_back(s.id);
  for (const auto& m : members) oof.members.push_back(m.name);
  oof.columns.assign(members.size(), std::vector<double>(set.size(), 0.0));

  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, held_rows;
    for (std::size_t i = 0; i < set.size(); ++i) (oof.fold[i] == f ? held_rows : train_rows).push_back(i);
    const auto train = subset(set, train_rows);
    auto held = subset(set, held_rows);
    std::vector<SarSample> unlabeled(held.samples());
    for (auto& s : unlabeled) s.label.reset();
    held = SampleSet(std::move(unlabeled), set.provenance());
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto p = members[m].fit_predict(train, held);
      if (p.size() != held_rows.size()) throw DimensionError("oof: member " + members[m].name + " returned wrong count");
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (!std::isfinite(p[j])) throw InvalidArgument("oof: member " + members[m].name + " returned non-finite");
        oof.columns[m][held_rows[j]] = p[j];
      }
    }
  }
  return oof;
}

double logit_clamped(double p) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return std::log(q) - std::log1p(-q);
}

Stacker fit_stacker(const OofMatrix& oof, std::span<const int> y, const StackerOptions& opts) {
  return fit_stacker(oof.columns, y, opts);
}

Stacker fit_stacker(const std::vector<std::vector<double>>& columns, std::span<const int> y,
                    const StackerOptions& opts) {
  if (columns.empty()) throw InvalidArgument("stacker: no member columns");
  const std::size_t n = y.size();
  const std::size_t m = columns.size();
  if (n == 0) throw InvalidArgument("stacker: no rows");
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw LabelError("stacker: labels must be 0 or 1");
    positives += static_cast<std::size_t>(v);
  }
  if (positives == 0 || positives == n) throw LabelError("stacker: both classes must be present");

  Eigen::MatrixXd z(n, m + 1);
  Eigen::VectorXd target(n);
  for (std::size_t j = 0; j < m; ++j) {
    if (columns[j].size() != n) throw DimensionError("stacker: column length differs from label count");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(columns[j][i])) throw InvalidArgument("stacker: non-finite member prediction");
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = logit_clamped(columns[j][i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = 1.0;
    target(static_cast<Eigen::Index>(i)) = y[i];
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  auto objective = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd s = z * theta;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) sum += softplus(s(i)) - target(i) * s(i);
    return sum * inv_n;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m + 1));
  Stacker out;
  for (out.iterations = 0;; ++out.iterations) {
    const Eigen::VectorXd s = z * theta;
    Eigen::VectorXd p(s.size()), w(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      p(i) = sigmoid(s(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = z.transpose() * (p - target) * inv_n;
    out.gradient_norm = grad.norm();
    if (out.gradient_norm < opts.tolerance || out.iterations >= opts.max_iterations) break;

    Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z * inv_n;
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().maxCoeff());
    Eigen::VectorXd dir = hess.ldlt().solve(grad);
    if (!dir.allFinite() || dir.dot(grad) <= 0.0) dir = grad;

    const double f0 = objective(theta);
    const double slope = dir.dot(grad);
    double t = 1.0;
    Eigen::VectorXd next = theta - dir;
    while (objective(next) > f0 - 1e-4 * t * slope && t > 1e-20) {
      t *= 0.5;
      next = theta - t * dir;
    }
    if (t <= 1e-20 || next == theta) break;
    theta = next;
  }
  out.weights.assign(theta.data(), theta.data() + m);
  out.bias = theta(static_cast<Eigen::Index>(m));
  for (double v : out.weights) {
    if (!std::isfinite(v)) throw InvalidArgument("stacker: fit diverged");
  }
  return out;
}

std::vector<double> predict_stacker(const Stacker& s, const std::vector<std::vector<double>>& columns) {
  if (columns.size() != s.weights.size()) throw DimensionError("stacker: member count mismatch");
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double score = s.bias;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != n) throw DimensionError("stacker: member columns differ in length");
      score += s.weights[j] * logit_clamped(columns[j][i]);
    }
    out[i] = std::clamp(sigmoid(score), kProbClamp, 1.0 - kProbClamp);
  }
  return out;
}

PredictionSet predict_stacker(const Stacker& s, std::span<const PredictionSet> member_preds) {
  if (member_preds.size() != s.weights.size()) throw DimensionError("stacker: member count mismatch");
  if (member_preds.empty()) return {};
  std::vector<std::vector<double>> columns;
  for (const auto& p : member_preds) {
    if (p.ids != member_preds[0].ids) throw DimensionError("stacker: member prediction ids differ");
    columns.push_back(p.probs);
  }
  return {member_preds[0].ids, predict_stacker(s, columns)};
}

BlendMode blend_mode_from_name(std::string_view name) {
  if (name == "mean") return BlendMode::mean;
  if (name == "logit_mean") return BlendMode::logit_mean;
  if (name == "weights") return BlendMode::weights;
  throw InvalidArgument("unknown blend mode: " + std::string(name));
}

PredictionSet blend(std::span<const PredictionSet> preds, BlendMode mode, std::span<const double> weights) {
  if (preds.empty()) throw InvalidArgument("blend: no predictions");
  const auto& base = preds[0];
  const std::size_t n = base.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(base.ids[i], i);
  if (index.size() != n) throw InvalidArgument("blend: duplicate ids");

  std::vector<std::vector<double>> aligned;
  for (const auto& p : preds) {
    if (p.size() != n || p.probs.size() != n) throw DimensionError("blend: id sets differ");
    std::vector<double> col(n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = index.find(p.ids[i]);
      if (it == index.end() || seen[it->second]) throw DimensionError("blend: id sets differ at " + p.ids[i]);
      seen[it->second] = true;
      col[it->second] = p.probs[i];
    }
    aligned.push_back(std::move(col));
  }

  std::vector<double> w(preds.size(), 1.0 / static_cast<double>(preds.size()));
  if (mode == BlendMode::weights) {
    if (weights.size() != preds.size()) throw DimensionError("blend: one weight per member required");
    double sum = 0.0;
    for (double v : weights) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("blend: weights must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("blend: weights must sum to 1");
    w.assign(weights.begin(), weights.end());
  }

  PredictionSet out{base.ids, std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (mode == BlendMode::logit_mean) {
      double z = 0.0;
      for (std::size_t m = 0; m < aligned.size(); ++m) z += logit_clamped(aligned[m][i]);
      out.probs[i] = sigmoid(z / static_cast<double>(aligned.size()));
      continue;
    }
    double v = 0.0;
    for (std::size_t m = 0; m < aligned.size(); ++m) {
      if (w[m] != 0.0) v += w[m] * aligned[m][i];
    }
    double lo = aligned[0][i], hi = aligned[0][i];
    for (const auto& col : aligned) {
      lo = std::min(lo, col[i]);
      hi = std::max(hi, col[i]);
    }
    out.probs[i] = std::clamp(v, lo, hi);  // rounding can step just outside the member range
  }
  return out;
}

void write_oof_csv(std::ostream& out, const OofMatrix& oof) {
  out << "id,fold,is_iceberg";
  for (const auto& m : oof.members) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < oof.rows(); ++i) {
    out << oof.ids[i] << ',' << oof.fold[i] << ',' << oof.labels[i];
    for (const auto& col : oof.columns) out << ',' << fmt(col[i]);
    out << '\n';
  }
}

OofMatrix read_oof_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ParseError("oof csv: missing header");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "fold" || header[2] != "is_iceberg") {
    throw ParseError("oof csv: bad header");
  }
  OofMatrix oof;
  oof.members.assign(header.begin() + 3, header.end());
  oof.columns.resize(oof.members.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ParseError("oof csv: wrong cell count on line " + std::to_string(line_no));
    try {
      oof.ids.push_back(cells[0]);
      oof.fold.push_back(std::stoi(cells[1]));
      oof.labels.push_back(std::stoi(cells[2]));
      for (std::size_t m = 0; m < oof.members.size(); ++m) oof.columns[m].push_back(std::stod(cells[3 + m]));
    } catch (const std::logic_error&) {
      throw ParseError("oof csv: bad number on line " + std::to_string(line_no));
    }
  }
  return oof;
}

std::string serialize_stacker(const Stacker& s, std::span<const std::string> members) {
  json doc{{"version", 1},
           {"weights", s.weights},
           {"bias", s.bias},
           {"iterations", s.iterations},
           {"gradient_norm", s.gradient_norm}};
  doc["members"] = std::vector<std::string>(members.begin(), members.end());
  return doc.dump(2);
}

Stacker deserialize_stacker(std::string_view bytes) {
  try {
    const auto doc = json::parse(bytes.begin(), bytes.end());
    if (doc.at("version").get<int>() != 1) throw ParseError("stacker: unsupported version");
    Stacker s;
    s.weights = doc.at("weights").get<std::vector<double>>();
    s.bias = doc.at("bias").get<double>();
    s.iterations = doc.value("iterations", 0);
    s.gradient_norm = doc.value("gradient_norm", 0.0);
    for (double w : s.weights) {
      if (!std::isfinite(w)) throw ParseError("stacker: non-finite weight");
    }
    if (!std::isfinite(s.bias)) throw ParseError("stacker: non-finite bias");
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("stacker: ") + e.what());
  }
}

}  // namespace icesar
