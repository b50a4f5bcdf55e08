#include "icesar/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "icesar/errors.hpp"

namespace icesar::nn {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double lr, const AdamHyper& hyper) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw DimensionError("adam: parameter, gradient and state sizes differ");
  }
  if (step == 0) throw InvalidArgument("adam: step count must be >= 1");
  for (double g : grads) {
    if (!std::isfinite(g)) throw InvalidArgument("adam: non-finite gradient");
  }
  const auto t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

void adam_step(Network& net, const std::vector<Tensor>& grads, double lr, const AdamHyper& hyper) {
  if (grads.size() != net.params.size()) throw DimensionError("adam: gradient count mismatch");
  if (net.adam.m.size() != net.params.size()) net.reset_optimizer();
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].shape != net.params[k].shape) throw DimensionError("adam: gradient shape mismatch");
    if (!grads[k].all_finite()) throw InvalidArgument("adam: non-finite gradient");
  }
  const std::uint64_t step = net.adam.step + 1;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    adam_update(net.params[k].values, grads[k].values, net.adam.m[k].values, net.adam.v[k].values, step, lr, hyper);
  }
  net.adam.step = step;
}

void PlateauConfig::validate() const {
  if (!(factor > 0.0 && factor < 1.0)) throw InvalidArgument("plateau: factor must lie in (0, 1)");
  if (!(lr0 > min_lr)) throw InvalidArgument("plateau: lr0 must exceed min_lr");
  if (patience < 1) throw InvalidArgument("plateau: patience must be >= 1");
  if (min_lr < 0.0) throw InvalidArgument("plateau: min_lr must be >= 0");
}

PlateauScheduler::PlateauScheduler(const PlateauConfig& cfg) : cfg_(cfg), lr_(cfg.lr0) { cfg_.validate(); }

double PlateauScheduler::step(double val_loss) {
  if (val_loss < best_ - cfg_.min_improvement) {
    best_ = val_loss;
    bad_epochs_ = 0;
    return lr_;
  }
  if (++bad_epochs_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    bad_epochs_ = 0;
  }
  return lr_;
}

std::vector<double> plateau_schedule(std::span<const double> val_losses, const PlateauConfig& cfg) {
  PlateauScheduler s(cfg);
  std::vector<double> out;
  out.reserve(val_losses.size());
  for (double l : val_losses) out.push_back(s.step(l));
  return out;
}

}  // namespace icesar::nn
