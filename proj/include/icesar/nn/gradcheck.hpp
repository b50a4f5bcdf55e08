#pragma once

#include <cstdint>
#include <span>

#include "icesar/nn/network.hpp"

namespace icesar::nn {

enum class Stencil {
  two_point,  // (f(+h) - f(-h)) / 2h
  four_point  // (8(f(+h) - f(-h)) - (f(+2h) - f(-2h))) / 12h
};

struct GradCheckOptions {
  std::size_t samples = 200;  // minimum number of parameter coordinates compared
  double step = 1e-3;         // central-difference step h
  Stencil stencil = Stencil::four_point;
  // Skip coordinates whose perturbation flips a ReLU sign or a max-pool
  // winner anywhere in the batch: the loss is not differentiable across
  // that interval, so no finite difference is a valid reference there.
  bool skip_kinks = true;
  std::uint64_t seed = 0;
  BackwardOptions backward{};
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // kink crossings
};

/// Compares analytic gradients against central differences on randomly chosen
/// parameters (every parameter tensor is represented). Forward passes run in
/// evaluation mode, so dropout is off. Relative error per coordinate is
/// |ga - gn| / max(|ga|, |gn|, 1e-8). Probing continues past skipped
/// coordinates until `samples` have been compared or none remain.
GradCheckResult gradient_check(const Network& net, const Tensor& batch, std::span<const int> y,
                               const GradCheckOptions& options = {});

/// Same check for the mean-squared reconstruction loss against `target`.
GradCheckResult gradient_check_mse(const Network& net, const Tensor& batch, const Tensor& target,
                                   const GradCheckOptions& options = {});

}  // namespace icesar::nn
