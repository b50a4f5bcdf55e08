#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "icesar/nn/network.hpp"

namespace icesar::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update on a flat parameter block. `step` is the
/// 1-based step count after incrementing. Throws InvalidArgument on a
/// non-finite gradient before touching anything.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double lr, const AdamHyper& hyper = {});

/// Applies one Adam step to every parameter of `net` using its stored state.
void adam_step(Network& net, const std::vector<Tensor>& grads, double lr, const AdamHyper& hyper = {});

struct PlateauConfig {
  double lr0 = 1e-3;
  int patience = 5;
  double factor = 0.1;
  double min_lr = 1e-6;
  double min_improvement = 1e-6;

  void validate() const;
};

/// Multiplies the learning rate by `factor` once the monitored loss has failed
/// to beat its best by more than `min_improvement` for `patience` consecutive
/// epochs, never going below `min_lr`.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(const PlateauConfig& cfg);

  /// Records one epoch's validation loss and returns the rate for the next epoch.
  double step(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }

 private:
  PlateauConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

/// Replays a whole validation-loss history; entry k is the rate in effect
/// after epoch k.
std::vector<double> plateau_schedule(std::span<const double> val_losses, const PlateauConfig& cfg);

}  // namespace icesar::nn
