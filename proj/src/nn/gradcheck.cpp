#include "icesar/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "icesar/metrics.hpp"
#include "icesar/rng.hpp"

namespace icesar::nn {

namespace {

using Coordinate = std::pair<std::size_t, std::size_t>;

// A per-tensor quota first so every tensor is represented, then the rest of
// the coordinates in random order as a reserve for skipped ones.
std::vector<Coordinate> probe_order(const Network& net, std::size_t samples, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9c));
  std::vector<Coordinate> picks, rest;
  const std::size_t share = (samples + net.params.size() - 1) / std::max<std::size_t>(net.params.size(), 1);
  for (std::size_t t = 0; t < net.params.size(); ++t) {
    std::vector<std::size_t> idx(net.params[t].size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t take = std::min(share, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) (k < take ? picks : rest).emplace_back(t, idx[k]);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  picks.insert(picks.end(), rest.begin(), rest.end());
  return picks;
}

// Which side of every kink the batch sits on: ReLU input signs and max-pool
// winners.
struct Pattern {
  std::vector<bool> relu;
  std::vector<std::uint32_t> pool;
  bool operator==(const Pattern&) const = default;
};

Pattern pattern_of(const Network& net, const Tensor& batch) {
  ForwardTrace trace;
  forward(net, batch, false, 0, &trace);
  Pattern p;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (std::holds_alternative<Relu>(net.layers[i])) {
      for (double v : trace.layers[i].input.values) p.relu.push_back(v > 0.0);
    } else if (std::holds_alternative<MaxPool2>(net.layers[i])) {
      const auto& a = trace.layers[i].argmax;
      p.pool.insert(p.pool.end(), a.begin(), a.end());
    }
  }
  return p;
}

GradCheckResult run_check(const Network& net, const Tensor& batch, const std::vector<Tensor>& analytic,
                          const std::function<double(const Network&)>& loss, const GradCheckOptions& options) {
  GradCheckResult result;
  Network probe = net;
  const double h = options.step;
  const bool four = options.stencil == Stencil::four_point;
  const Pattern base = options.skip_kinks ? pattern_of(net, batch) : Pattern{};
  std::vector<double> offsets{h, -h};
  if (four) offsets.insert(offsets.end(), {2 * h, -2 * h});

  for (const auto& [t, i] : probe_order(net, options.samples, options.seed)) {
    if (result.checked >= options.samples) break;
    const double original = probe.params[t][i];
    std::vector<double> f;
    bool kink = false;
    for (double d : offsets) {
      probe.params[t][i] = original + d;
      if (options.skip_kinks && !(pattern_of(probe, batch) == base)) {
        kink = true;
        break;
      }
      f.push_back(loss(probe));
    }
    probe.params[t][i] = original;
    if (kink) {
      ++result.skipped;
      continue;
    }

    const double numeric = four ? (8.0 * (f[0] - f[1]) - (f[2] - f[3])) / (12.0 * h) : (f[0] - f[1]) / (2.0 * h);
    const double a = analytic[t][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace

GradCheckResult gradient_check(const Network& net, const Tensor& batch, std::span<const int> y,
                               const GradCheckOptions& options) {
  const auto analytic = logloss_gradients(net, batch, y, false, 0, options.backward);
  return run_check(
      net, batch, analytic.grads,
      [&](const Network& n) { return loss_logloss(forward(n, batch, false, 0).values, y); }, options);
}

GradCheckResult gradient_check_mse(const Network& net, const Tensor& batch, const Tensor& target,
                                   const GradCheckOptions& options) {
  const auto analytic = mse_gradients(net, batch, target, false, 0, options.backward);
  return run_check(
      net, batch, analytic.grads,
      [&](const Network& n) { return loss_mse(forward(n, batch, false, 0).values, target.values); }, options);
}

}  // namespace icesar::nn
