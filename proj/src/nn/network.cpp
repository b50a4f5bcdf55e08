#include "icesar/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "icesar/errors.hpp"
#include "icesar/metrics.hpp"
#include "icesar/rng.hpp"

namespace icesar::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Column layout: row (c*9 + ki*3 + kj), column (r*W + col).
void im2col(const double* x, std::size_t channels, std::size_t h, std::size_t w, double* col) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = x + c * hw;
    for (int ki = 0; ki < 3; ++ki) {
      for (int kj = 0; kj < 3; ++kj) {
        double* row = col + ((c * 3 + static_cast<std::size_t>(ki)) * 3 + static_cast<std::size_t>(kj)) * hw;
        for (std::size_t r = 0; r < h; ++r) {
          const auto sr = static_cast<std::ptrdiff_t>(r) + ki - 1;
          double* dst = row + r * w;
          if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(sr) * w;
          for (std::size_t cc = 0; cc < w; ++cc) {
            const auto sc = static_cast<std::ptrdiff_t>(cc) + kj - 1;
            dst[cc] = (sc < 0 || sc >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : src[sc];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, std::size_t channels, std::size_t h, std::size_t w, double* x) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = x + c * hw;
    for (int ki = 0; ki < 3; ++ki) {
      for (int kj = 0; kj < 3; ++kj) {
        const double* row =
            col + ((c * 3 + static_cast<std::size_t>(ki)) * 3 + static_cast<std::size_t>(kj)) * hw;
        for (std::size_t r = 0; r < h; ++r) {
          const auto sr = static_cast<std::ptrdiff_t>(r) + ki - 1;
          if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dst = plane + static_cast<std::size_t>(sr) * w;
          const double* src = row + r * w;
          for (std::size_t cc = 0; cc < w; ++cc) {
            const auto sc = static_cast<std::ptrdiff_t>(cc) + kj - 1;
            if (sc >= 0 && sc < static_cast<std::ptrdiff_t>(w)) dst[sc] += src[cc];
          }
        }
      }
    }
  }
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Shape layer_output_shape(const Network& net, const Layer& layer, const Shape& in) {
  auto need_rank = [&](std::size_t r) {
    if (in.size() != r) {
      throw DimensionError(layer_name(layer) + ": expected rank-" + std::to_string(r) + " input, got " +
                           shape_string(in));
    }
  };
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) -> Shape {
            need_rank(3);
            if (in[0] != l.in_ch) throw DimensionError("conv2d: input has " + std::to_string(in[0]) + " channels");
            (void)net;
            return {l.out_ch, in[1], in[2]};
          },
          [&](const MaxPool2&) -> Shape {
            need_rank(3);
            if (in[1] < 2 || in[2] < 2) throw DimensionError("maxpool2: input smaller than 2x2");
            return {in[0], in[1] / 2, in[2] / 2};
          },
          [&](const Flatten&) -> Shape { return {shape_size(in)}; },
          [&](const Dense& l) -> Shape {
            need_rank(1);
            if (in[0] != l.in) throw DimensionError("dense: input width " + std::to_string(in[0]));
            return {l.out};
          },
          [&](const Upsample2& l) -> Shape {
            need_rank(3);
            return {in[0], l.out_h ? l.out_h : 2 * in[1], l.out_w ? l.out_w : 2 * in[2]};
          },
          [&](const auto&) -> Shape { return in; },
      },
      layer);
}

// ---------------------------------------------------------------------------
// Per-layer forward

Tensor conv_forward(const Network& net, const Conv2d& l, const Tensor& in) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3), hw = h * w;
  const std::size_t k = c * 9;
  Tensor out({n, l.out_ch, h, w});
  RowMat col(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
  ConstMapMat weight(net.params[l.weight].data(), static_cast<Eigen::Index>(l.out_ch), static_cast<Eigen::Index>(k));
  ConstMapVec bias(net.params[l.bias].data(), static_cast<Eigen::Index>(l.out_ch));
  for (std::size_t s = 0; s < n; ++s) {
    im2col(in.data() + s * c * hw, c, h, w, col.data());
    MapMat y(out.data() + s * l.out_ch * hw, static_cast<Eigen::Index>(l.out_ch), static_cast<Eigen::Index>(hw));
    y.noalias() = weight * col;
    y.colwise() += bias;
  }
  return out;
}

Tensor pool_forward(const Tensor& in, LayerCache* cache) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({n, c, oh, ow});
  if (cache) cache->argmax.resize(out.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t cc = 0; cc < ow; ++cc, ++o) {
        std::size_t best = base + 2 * r * w + 2 * cc;
        for (std::size_t dr = 0; dr < 2; ++dr) {
          for (std::size_t dc = 0; dc < 2; ++dc) {
            const std::size_t idx = base + (2 * r + dr) * w + 2 * cc + dc;
            if (in[idx] > in[best]) best = idx;
          }
        }
        out[o] = in[best];
        if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

Tensor dense_forward(const Network& net, const Dense& l, const Tensor& in) {
  const std::size_t n = in.dim(0);
  Tensor out({n, l.out});
  ConstMapMat x(in.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l.in));
  ConstMapMat weight(net.params[l.weight].data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
  ConstMapVec bias(net.params[l.bias].data(), static_cast<Eigen::Index>(l.out));
  MapMat y(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l.out));
  y.noalias() = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return out;
}

Tensor upsample_forward(const Upsample2& l, const Tensor& in) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  const std::size_t oh = l.out_h ? l.out_h : 2 * h, ow = l.out_w ? l.out_w : 2 * w;
  Tensor out({n, c, oh, ow});
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* src = in.data() + plane * h * w;
    for (std::size_t r = 0; r < oh; ++r) {
      const std::size_t sr = r * h / oh;
      for (std::size_t cc = 0; cc < ow; ++cc) out[o++] = src[sr * w + cc * w / ow];
    }
  }
  return out;
}

Tensor layer_forward(const Network& net, const Layer& layer, const Tensor& in, bool training, Rng& rng,
                     LayerCache* cache) {
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) { return conv_forward(net, l, in); },
          [&](const Relu&) {
            Tensor out = in;
            for (double& v : out.values) v = v > 0.0 ? v : 0.0;
            return out;
          },
          [&](const MaxPool2&) { return pool_forward(in, cache); },
          [&](const Dropout& l) {
            if (!training || l.rate <= 0.0) return in;
            const double keep = 1.0 - l.rate;
            std::bernoulli_distribution coin(keep);
            std::vector<double> mask(in.size());
            for (double& m : mask) m = coin(rng) ? 1.0 / keep : 0.0;
            Tensor out = in;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
            if (cache) cache->mask = std::move(mask);
            return out;
          },
          [&](const Flatten&) {
            const std::size_t n = in.dim(0);
            return Tensor({n, in.size() / n}, in.values);
          },
          [&](const Dense& l) { return dense_forward(net, l, in); },
          [&](const Sigmoid&) {
            Tensor out = in;
            for (double& v : out.values) v = sigmoid(v);
            return out;
          },
          [&](const Upsample2& l) { return upsample_forward(l, in); },
      },
      layer);
}

// ---------------------------------------------------------------------------
// Per-layer backward

Tensor conv_backward(const Network& net, const Conv2d& l, const Tensor& in, const Tensor& dy, bool need_input_grad,
                     std::vector<Tensor>& grads, const BackwardOptions& options) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3), hw = h * w;
  const std::size_t k = c * 9;
  const auto eo = static_cast<Eigen::Index>(l.out_ch), ek = static_cast<Eigen::Index>(k),
             ehw = static_cast<Eigen::Index>(hw);
  MapMat dweight(grads[l.weight].data(), eo, ek);
  MapVec dbias(grads[l.bias].data(), eo);

  RowMat weight = ConstMapMat(net.params[l.weight].data(), eo, ek);
  if (options.corrupt_conv_input_gradient) {
    for (std::size_t o = 0; o < l.out_ch; ++o) {
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t t = 0; t < 9; ++t) {
          weight(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(ci * 9 + t)) =
              net.params[l.weight][(o * c + ci) * 9 + (8 - t)];
        }
      }
    }
  }

  Tensor dx;
  if (need_input_grad) dx = Tensor(in.shape);
  RowMat col(ek, ehw), dcol;
  if (need_input_grad) dcol.resize(ek, ehw);
  for (std::size_t s = 0; s < n; ++s) {
    im2col(in.data() + s * c * hw, c, h, w, col.data());
    ConstMapMat g(dy.data() + s * l.out_ch * hw, eo, ehw);
    dweight.noalias() += g * col.transpose();
    // Plain loops: Eigen's vectorized reductions round differently depending
    // on buffer alignment, which would break run-to-run determinism.
    for (Eigen::Index o = 0; o < eo; ++o) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < ehw; ++k) acc += g(o, k);
      dbias(o) += acc;
    }
    if (need_input_grad) {
      dcol.noalias() = weight.transpose() * g;
      col2im_add(dcol.data(), c, h, w, dx.data() + s * c * hw);
    }
  }
  return dx;
}

Tensor dense_backward(const Network& net, const Dense& l, const Tensor& in, const Tensor& dy,
                      std::vector<Tensor>& grads) {
  const auto n = static_cast<Eigen::Index>(in.dim(0));
  const auto ei = static_cast<Eigen::Index>(l.in), eo = static_cast<Eigen::Index>(l.out);
  ConstMapMat x(in.data(), n, ei);
  ConstMapMat g(dy.data(), n, eo);
  ConstMapMat weight(net.params[l.weight].data(), eo, ei);
  MapMat dweight(grads[l.weight].data(), eo, ei);
  MapVec dbias(grads[l.bias].data(), eo);
  dweight.noalias() += g.transpose() * x;
  for (Eigen::Index o = 0; o < eo; ++o) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) acc += g(s, o);
    dbias(o) += acc;
  }
  Tensor dx(in.shape);
  MapMat dxm(dx.data(), n, ei);
  dxm.noalias() = g * weight;
  return dx;
}

Tensor layer_backward(const Network& net, const Layer& layer, const LayerCache& cache, const Tensor& dy,
                      bool need_input_grad, std::vector<Tensor>& grads, const BackwardOptions& options) {
  const Tensor& in = cache.input;
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) { return conv_backward(net, l, in, dy, need_input_grad, grads, options); },
          [&](const Relu&) {
            Tensor dx = dy;
            for (std::size_t i = 0; i < dx.size(); ++i) {
              if (!(in[i] > 0.0)) dx[i] = 0.0;
            }
            return dx;
          },
          [&](const MaxPool2&) {
            Tensor dx(in.shape);
            for (std::size_t o = 0; o < dy.size(); ++o) dx[cache.argmax[o]] += dy[o];
            return dx;
          },
          [&](const Dropout&) {
            Tensor dx = dy;
            if (!cache.mask.empty()) {
              for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.mask[i];
            }
            return dx;
          },
          [&](const Flatten&) { return Tensor(in.shape, dy.values); },
          [&](const Dense& l) { return dense_backward(net, l, in, dy, grads); },
          [&](const Sigmoid&) {
            Tensor dx = dy;
            for (std::size_t i = 0; i < dx.size(); ++i) {
              const double s = sigmoid(in[i]);
              dx[i] *= s * (1.0 - s);
            }
            return dx;
          },
          [&](const Upsample2&) {
            const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
            const std::size_t oh = dy.dim(2), ow = dy.dim(3);
            Tensor dx(in.shape);
            std::size_t o = 0;
            for (std::size_t plane = 0; plane < n * c; ++plane) {
              double* dst = dx.data() + plane * h * w;
              for (std::size_t r = 0; r < oh; ++r) {
                const std::size_t sr = r * h / oh;
                for (std::size_t cc = 0; cc < ow; ++cc) dst[sr * w + cc * w / ow] += dy[o++];
              }
            }
            return dx;
          },
      },
      layer);
}

// ---------------------------------------------------------------------------
// Builders

void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values) v = dist(rng);
}

void add_conv(Network& net, std::size_t in_ch, std::size_t out_ch, Rng& rng) {
  Conv2d l{in_ch, out_ch, net.params.size(), net.params.size() + 1};
  Tensor w({out_ch, in_ch, 3, 3});
  he_uniform(w, in_ch * 9, rng);
  net.params.push_back(std::move(w));
  net.params.emplace_back(Shape{out_ch});
  net.layers.emplace_back(l);
}

void add_dense(Network& net, std::size_t in, std::size_t out, Rng& rng) {
  Dense l{in, out, net.params.size(), net.params.size() + 1};
  Tensor w({out, in});
  he_uniform(w, in, rng);
  net.params.push_back(std::move(w));
  net.params.emplace_back(Shape{out});
  net.layers.emplace_back(l);
}

void check_spec(const ArchSpec& spec) {
  if (spec.input_ch < 1) throw InvalidArgument("network: input_ch must be >= 1");
  if (spec.height < 8 || spec.width < 8) throw InvalidArgument("network: input must be at least 8x8");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw InvalidArgument("network: dropout must lie in [0, 1)");
}

}  // namespace

std::string layer_name(const Layer& layer) {
  static const char* names[] = {"conv2d", "relu", "maxpool2", "dropout", "flatten", "dense", "sigmoid", "upsample2"};
  return names[layer.index()];
}

Shape Network::output_shape() const {
  Shape s = input;
  for (const auto& l : layers) s = layer_output_shape(*this, l, s);
  return s;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

void Network::reset_optimizer() {
  adam.m.clear();
  adam.v.clear();
  for (const auto& p : params) {
    adam.m.emplace_back(p.shape);
    adam.v.emplace_back(p.shape);
  }
  adam.step = 0;
}

ArchSpec ArchSpec::tiny(std::size_t input_ch) {
  ArchSpec s;
  s.input_ch = input_ch;
  s.height = 16;
  s.width = 16;
  s.conv_channels = {4, 6, 8};
  s.dense_units = 8;
  return s;
}

Network build_classifier(const ArchSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(derive_seed(seed, 0xc1a55));
  Network net;
  net.input = {spec.input_ch, spec.height, spec.width};
  std::size_t ch = spec.input_ch, h = spec.height, w = spec.width;
  for (std::size_t out : spec.conv_channels) {
    add_conv(net, ch, out, rng);
    net.layers.emplace_back(Relu{});
    net.layers.emplace_back(MaxPool2{});
    ch = out;
    h /= 2;
    w /= 2;
  }
  net.layers.emplace_back(Flatten{});
  net.layers.emplace_back(Dropout{spec.dropout});
  add_dense(net, ch * h * w, spec.dense_units, rng);
  net.layers.emplace_back(Relu{});
  net.layers.emplace_back(Dropout{spec.dropout});
  add_dense(net, spec.dense_units, 1, rng);
  net.layers.emplace_back(Sigmoid{});
  net.reset_optimizer();
  return net;
}

Network build_classifier(std::size_t input_ch, std::uint64_t seed) {
  return build_classifier(ArchSpec::reference(input_ch), seed);
}

Network build_autoencoder(const ArchSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(derive_seed(seed, 0xae));
  Network net;
  net.input = {spec.input_ch, spec.height, spec.width};
  std::array<std::size_t, 4> hs{spec.height}, ws{spec.width};
  std::size_t ch = spec.input_ch;
  for (std::size_t b = 0; b < 3; ++b) {
    add_conv(net, ch, spec.conv_channels[b], rng);
    net.layers.emplace_back(Relu{});
    net.layers.emplace_back(MaxPool2{});
    ch = spec.conv_channels[b];
    hs[b + 1] = hs[b] / 2;
    ws[b + 1] = ws[b] / 2;
  }
  for (std::size_t b = 3; b-- > 0;) {
    net.layers.emplace_back(Upsample2{hs[b], ws[b]});
    const std::size_t out = b == 0 ? spec.input_ch : spec.conv_channels[b - 1];
    add_conv(net, ch, out, rng);
    if (b != 0) net.layers.emplace_back(Relu{});
    ch = out;
  }
  net.reset_optimizer();
  return net;
}

Network build_autoencoder(std::size_t input_ch, std::uint64_t seed) {
  return build_autoencoder(ArchSpec::reference(input_ch), seed);
}

std::vector<std::size_t> conv_layers(const Network& net) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (std::holds_alternative<Conv2d>(net.layers[i])) idx.push_back(i);
  }
  return idx;
}

Network transfer_encoder(const Network& ae, const Network& clf) {
  const auto src = conv_layers(ae);
  const auto dst = conv_layers(clf);
  if (src.size() < dst.size()) throw DimensionError("transfer: autoencoder has fewer conv layers than the classifier");
  Network out = clf;
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const auto& a = std::get<Conv2d>(ae.layers[src[k]]);
    const auto& c = std::get<Conv2d>(clf.layers[dst[k]]);
    if (a.in_ch != c.in_ch || a.out_ch != c.out_ch) {
      throw DimensionError("transfer: conv block " + std::to_string(k) + " shapes differ (" +
                           std::to_string(a.in_ch) + "->" + std::to_string(a.out_ch) + " vs " +
                           std::to_string(c.in_ch) + "->" + std::to_string(c.out_ch) + ")");
    }
    out.params[c.weight] = ae.params[a.weight];
    out.params[c.bias] = ae.params[a.bias];
  }
  out.reset_optimizer();
  return out;
}

Tensor forward(const Network& net, const Tensor& batch, bool training, std::uint64_t rng_seed, ForwardTrace* trace) {
  if (batch.rank() != net.input.size() + 1 || !std::equal(net.input.begin(), net.input.end(), batch.shape.begin() + 1)) {
    throw DimensionError("forward: batch shape " + shape_string(batch.shape) + " does not match network input " +
                         shape_string(net.input));
  }
  if (batch.dim(0) == 0) throw DimensionError("forward: empty batch");
  Rng rng(rng_seed);
  if (trace) trace->layers.assign(net.layers.size(), {});
  Tensor x = batch;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    LayerCache* cache = trace ? &trace->layers[i] : nullptr;
    if (cache) {
      cache->input = std::move(x);
      x = layer_forward(net, net.layers[i], cache->input, training, rng, cache);
    } else {
      x = layer_forward(net, net.layers[i], x, training, rng, nullptr);
    }
  }
  return x;
}

std::vector<Tensor> backward(const Network& net, const ForwardTrace& trace, Tensor grad_output, std::size_t end_layer,
                             const BackwardOptions& options) {
  if (trace.layers.size() != net.layers.size() || end_layer > net.layers.size()) {
    throw DimensionError("backward: trace does not belong to this network");
  }
  std::vector<Tensor> grads;
  grads.reserve(net.params.size());
  for (const auto& p : net.params) grads.emplace_back(p.shape);

  Tensor g = std::move(grad_output);
  for (std::size_t i = end_layer; i-- > 0;) {
    g = layer_backward(net, net.layers[i], trace.layers[i], g, i > 0, grads, options);
  }
  return grads;
}

LossAndGrad logloss_gradients(const Network& net, const Tensor& batch, std::span<const int> y, bool training,
                              std::uint64_t rng_seed, const BackwardOptions& options) {
  if (net.layers.empty() || !std::holds_alternative<Sigmoid>(net.layers.back())) {
    throw InvalidArgument("logloss_gradients: network must end in a sigmoid");
  }
  ForwardTrace trace;
  LossAndGrad r;
  r.output = forward(net, batch, training, rng_seed, &trace);
  const std::size_t n = batch.dim(0);
  if (y.size() != n || r.output.size() != n) throw DimensionError("logloss_gradients: label count mismatch");
  r.loss = loss_logloss(r.output.values, y);
  Tensor dz(r.output.shape);
  for (std::size_t i = 0; i < n; ++i) dz[i] = (r.output[i] - static_cast<double>(y[i])) / static_cast<double>(n);
  r.grads = backward(net, trace, std::move(dz), net.layers.size() - 1, options);
  return r;
}

double loss_mse(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size() || output.empty()) throw DimensionError("mse: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) sum += (output[i] - target[i]) * (output[i] - target[i]);
  return sum / static_cast<double>(output.size());
}

LossAndGrad mse_gradients(const Network& net, const Tensor& batch, const Tensor& target, bool training,
                          std::uint64_t rng_seed, const BackwardOptions& options) {
  ForwardTrace trace;
  LossAndGrad r;
  r.output = forward(net, batch, training, rng_seed, &trace);
  if (r.output.shape != target.shape) throw DimensionError("mse_gradients: target shape mismatch");
  r.loss = loss_mse(r.output.values, target.values);
  Tensor d(r.output.shape);
  const double scale = 2.0 / static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = scale * (r.output[i] - target[i]);
  r.grads = backward(net, trace, std::move(d), net.layers.size(), options);
  return r;
}

}  // namespace icesar::nn
