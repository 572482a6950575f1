#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pathovox/rng.hpp"
#include "pathovox/tensor.hpp"

namespace pathovox {

enum class Activation { linear, relu, tanh };

/// Applies the activation in place.
void activate(double* v, std::size_t n, Activation act);

// Parameter bundles. Gate rows of the LSTM kernels are ordered
// input, forget, cell, output.
struct ConvParams {
  Tensor w;  // (out_channels, in_channels, kernel)
  Tensor b;  // (out_channels)
};

struct DenseParams {
  Tensor w;  // (out, in)
  Tensor b;  // (out)
};

struct LstmParams {
  Tensor wx;  // (4H, D)
  Tensor wh;  // (4H, H)
  Tensor b;   // (4H)
};

/// Uniform init on [-a, a], a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform_init(std::size_t fan_in, std::size_t fan_out,
                           std::vector<std::size_t> shape, Rng& rng);

// --- 1-D convolution, stride 1, zero padding so output length equals
// input length. floor((K-1)/2) zeros go left, the remainder right.
Tensor conv1d_same_forward(const Tensor& input, const ConvParams& params, Activation act);

struct ConvGrads {
  Tensor input;   // same shape as input; empty when need_input_grad = false
  Tensor w;
  Tensor b;
};
ConvGrads conv1d_same_backward(const Tensor& input, const ConvParams& params,
                               const Tensor& output, const Tensor& upstream, Activation act,
                               bool need_input_grad = true);

// --- non-overlapping max pooling; remainder columns dropped.
struct PoolResult {
  Tensor output;                   // (C, L / pool)
  std::vector<std::size_t> argmax;  // flat input index per output element
};
PoolResult maxpool1d_forward(const Tensor& input, std::size_t pool);
/// Routes each upstream value to its argmax position (first index on ties).
Tensor maxpool1d_backward(const PoolResult& pooled, const std::vector<std::size_t>& input_shape,
                          const Tensor& upstream);

// --- fully connected layer: out = act(W x + b).
Tensor dense_forward(const Tensor& input, const DenseParams& params, Activation act);

struct DenseGrads {
  Tensor input;
  Tensor w;
  Tensor b;
};
DenseGrads dense_backward(const Tensor& input, const DenseParams& params, const Tensor& output,
                          const Tensor& upstream, Activation act);

/// Numerically stable softmax: p_k = exp(z_k - max z) / sum.
std::vector<double> softmax(std::span<const double> logits);

/// Inverted dropout: identity when training is false or rate is 0,
/// otherwise each element is kept with probability 1-rate and scaled
/// by 1/(1-rate).
Tensor dropout_apply(const Tensor& input, double rate, bool training, Rng& rng);

/// Per-element multipliers: 0 for dropped units, 1/(1-rate) for kept ones.
std::vector<double> dropout_mask(std::size_t n, double rate, bool training, Rng& rng);

// --- LSTM over a (T, D) sequence, returning the final hidden state.
// The input dropout mask (on x_t) and the recurrent dropout mask (on
// h_{t-1}) are each sampled once per sequence and reused at every step.
struct LstmCache {
  std::size_t steps = 0, input_dim = 0, units = 0;
  std::vector<double> input_mask;      // D multipliers
  std::vector<double> recurrent_mask;  // H multipliers
  // per step, concatenated: masked input, masked previous hidden state,
  // gate activations, cell state and its tanh
  std::vector<double> xm;      // T x D
  std::vector<double> hm;      // T x H
  std::vector<double> gates;   // T x 4H, post-activation (i, f, g, o)
  std::vector<double> cell;    // T x H
  std::vector<double> tanh_c;  // T x H
};

Tensor lstm_forward(const Tensor& sequence, const LstmParams& params, double input_dropout,
                    double recurrent_dropout, bool training, Rng& rng, LstmCache* cache);

struct LstmGrads {
  Tensor sequence;  // (T, D)
  Tensor wx;
  Tensor wh;
  Tensor b;
};
/// Backpropagation through time. The cache must come from the matching
/// forward call (its dropout masks are reused exactly).
LstmGrads lstm_backward(const LstmParams& params, const LstmCache& cache,
                        const Tensor& final_hidden_grad);

// --- closed-form trainable parameter counts.
inline std::size_t conv_param_count(std::size_t out_ch, std::size_t in_ch, std::size_t kernel) {
  return out_ch * (in_ch * kernel + 1);
}
inline std::size_t dense_param_count(std::size_t out, std::size_t in) { return out * (in + 1); }
inline std::size_t lstm_param_count(std::size_t units, std::size_t input_dim) {
  return 4 * (units * (input_dim + units) + units);
}

}  // namespace pathovox
