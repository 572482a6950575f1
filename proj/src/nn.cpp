#include "pathovox/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pathovox {

namespace {

// Hot kernels: conv and LSTM time dominate training, so both are phrased
// as contiguous axpy/dot passes the compiler can vectorize.

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) s0 += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double act_deriv_from_output(double y, Activation act) {
  switch (act) {
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

void check_conv_shapes(const Tensor& input, const ConvParams& params) {
  if (input.shape.size() != 2) throw ShapeMismatch("conv1d input must be (channels, length)");
  if (params.w.shape.size() != 3)
    throw ShapeMismatch("conv1d weights must be (out_channels, in_channels, kernel)");
  if (params.w.shape[1] != input.shape[0])
    throw ShapeMismatch("conv1d input channels do not match weights");
  if (params.b.shape.size() != 1 || params.b.shape[0] != params.w.shape[0])
    throw ShapeMismatch("conv1d bias does not match output channels");
}

// Input padded with zeros so a stride-1 kernel keeps the length: K-1
// columns total, floor((K-1)/2) on the left and the remainder right.
std::vector<double> pad_input(const Tensor& input, std::size_t kernel) {
  const std::size_t channels = input.shape[0], length = input.shape[1];
  const std::size_t pad_left = (kernel - 1) / 2;
  const std::size_t padded = length + kernel - 1;
  std::vector<double> xpad(channels * padded, 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    std::copy(input.data() + c * length, input.data() + (c + 1) * length,
              xpad.data() + c * padded + pad_left);
  return xpad;
}

}  // namespace

void activate(double* v, std::size_t n, Activation act) {
  switch (act) {
    case Activation::linear: return;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
      return;
  }
}

Tensor glorot_uniform_init(std::size_t fan_in, std::size_t fan_out,
                           std::vector<std::size_t> shape, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw InvalidConfig("glorot init needs fan_in, fan_out >= 1");
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = rng.uniform(-a, a);
  return t;
}

Tensor conv1d_same_forward(const Tensor& input, const ConvParams& params, Activation act) {
  check_conv_shapes(input, params);
  require_finite(input, "conv1d input");
  const std::size_t in_ch = input.shape[0], length = input.shape[1];
  const std::size_t out_ch = params.w.shape[0], kernel = params.w.shape[2];
  const std::size_t padded = length + kernel - 1;

  const std::vector<double> xpad = pad_input(input, kernel);
  Tensor out = Tensor::zeros({out_ch, length});
  for (std::size_t o = 0; o < out_ch; ++o) {
    double* out_row = out.data() + o * length;
    std::fill(out_row, out_row + length, params.b[o]);
    const double* w_o = params.w.data() + o * in_ch * kernel;
    for (std::size_t c = 0; c < in_ch; ++c) {
      const double* x_c = xpad.data() + c * padded;
      for (std::size_t k = 0; k < kernel; ++k) axpy(w_o[c * kernel + k], x_c + k, out_row, length);
    }
    activate(out_row, length, act);
  }
  return out;
}

ConvGrads conv1d_same_backward(const Tensor& input, const ConvParams& params,
                               const Tensor& output, const Tensor& upstream, Activation act,
                               bool need_input_grad) {
  check_conv_shapes(input, params);
  if (upstream.shape != output.shape) throw ShapeMismatch("conv1d upstream does not match output");
  require_finite(upstream, "conv1d upstream gradient");
  const std::size_t in_ch = input.shape[0], length = input.shape[1];
  const std::size_t out_ch = params.w.shape[0], kernel = params.w.shape[2];
  const std::size_t padded = length + kernel - 1;
  const std::size_t pad_left = (kernel - 1) / 2;

  // dz = upstream * act'(output)
  Tensor dz = Tensor::zeros({out_ch, length});
  for (std::size_t i = 0; i < dz.size(); ++i)
    dz[i] = upstream[i] * act_deriv_from_output(output[i], act);

  const std::vector<double> xpad = pad_input(input, kernel);
  ConvGrads grads;
  grads.w = Tensor::zeros(params.w.shape);
  grads.b = Tensor::zeros(params.b.shape);
  std::vector<double> dxpad;
  if (need_input_grad) dxpad.assign(in_ch * padded, 0.0);

  for (std::size_t o = 0; o < out_ch; ++o) {
    const double* dz_o = dz.data() + o * length;
    double bsum = 0.0;
    for (std::size_t t = 0; t < length; ++t) bsum += dz_o[t];
    grads.b[o] = bsum;
    const double* w_o = params.w.data() + o * in_ch * kernel;
    double* dw_o = grads.w.data() + o * in_ch * kernel;
    for (std::size_t c = 0; c < in_ch; ++c) {
      const double* x_c = xpad.data() + c * padded;
      for (std::size_t k = 0; k < kernel; ++k) dw_o[c * kernel + k] = dot(dz_o, x_c + k, length);
      if (need_input_grad) {
        double* dx_c = dxpad.data() + c * padded;
        for (std::size_t k = 0; k < kernel; ++k) axpy(w_o[c * kernel + k], dz_o, dx_c + k, length);
      }
    }
  }

  if (need_input_grad) {
    grads.input = Tensor::zeros(input.shape);
    for (std::size_t c = 0; c < in_ch; ++c)
      std::copy(dxpad.data() + c * padded + pad_left,
                dxpad.data() + c * padded + pad_left + length, grads.input.data() + c * length);
  }
  return grads;
}

PoolResult maxpool1d_forward(const Tensor& input, std::size_t pool) {
  if (input.shape.size() != 2) throw ShapeMismatch("maxpool input must be (channels, length)");
  if (pool < 1) throw InvalidConfig("pool size must be >= 1");
  const std::size_t channels = input.shape[0], length = input.shape[1];
  if (length < pool)
    throw TooShort("maxpool input length " + std::to_string(length) + " < pool " +
                   std::to_string(pool));
  const std::size_t out_len = length / pool;

  PoolResult result;
  result.output = Tensor::zeros({channels, out_len});
  result.argmax.resize(channels * out_len);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* x = input.data() + c * length;
    for (std::size_t t = 0; t < out_len; ++t) {
      std::size_t best = t * pool;
      for (std::size_t k = 1; k < pool; ++k)
        if (x[t * pool + k] > x[best]) best = t * pool + k;
      result.output[c * out_len + t] = x[best];
      result.argmax[c * out_len + t] = c * length + best;
    }
  }
  return result;
}

Tensor maxpool1d_backward(const PoolResult& pooled, const std::vector<std::size_t>& input_shape,
                          const Tensor& upstream) {
  if (upstream.shape != pooled.output.shape)
    throw ShapeMismatch("maxpool upstream does not match pooled output");
  Tensor dx = Tensor::zeros(input_shape);
  for (std::size_t i = 0; i < pooled.argmax.size(); ++i) dx[pooled.argmax[i]] += upstream[i];
  return dx;
}

Tensor dense_forward(const Tensor& input, const DenseParams& params, Activation act) {
  if (input.shape.size() != 1) throw ShapeMismatch("dense input must be a vector");
  if (params.w.shape.size() != 2 || params.w.shape[1] != input.shape[0])
    throw ShapeMismatch("dense weights do not match input");
  require_finite(input, "dense input");
  const std::size_t out = params.w.shape[0], in = params.w.shape[1];
  Tensor y = Tensor::zeros({out});
  for (std::size_t o = 0; o < out; ++o)
    y[o] = params.b[o] + dot(params.w.data() + o * in, input.data(), in);
  activate(y.data(), out, act);
  return y;
}

DenseGrads dense_backward(const Tensor& input, const DenseParams& params, const Tensor& output,
                          const Tensor& upstream, Activation act) {
  if (upstream.shape != output.shape) throw ShapeMismatch("dense upstream does not match output");
  require_finite(upstream, "dense upstream gradient");
  const std::size_t out = params.w.shape[0], in = params.w.shape[1];

  DenseGrads grads;
  grads.w = Tensor::zeros(params.w.shape);
  grads.b = Tensor::zeros({out});
  grads.input = Tensor::zeros(input.shape);
  for (std::size_t o = 0; o < out; ++o) {
    const double dz = upstream[o] * act_deriv_from_output(output[o], act);
    grads.b[o] = dz;
    axpy(dz, input.data(), grads.w.data() + o * in, in);
    axpy(dz, params.w.data() + o * in, grads.input.data(), in);
  }
  return grads;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw ShapeMismatch("softmax needs at least 2 logits");
  require_finite(logits.data(), logits.size(), "softmax input");
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - zmax);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> dropout_mask(std::size_t n, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidConfig("dropout rate must be in [0, 1)");
  std::vector<double> mask(n, 1.0);
  if (!training || rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.next_double() >= rate ? keep_scale : 0.0;
  return mask;
}

Tensor dropout_apply(const Tensor& input, double rate, bool training, Rng& rng) {
  const std::vector<double> mask = dropout_mask(input.size(), rate, training, rng);
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

Tensor lstm_forward(const Tensor& sequence, const LstmParams& params, double input_dropout,
                    double recurrent_dropout, bool training, Rng& rng, LstmCache* cache) {
  if (sequence.shape.size() != 2) throw ShapeMismatch("lstm input must be (steps, features)");
  const std::size_t steps = sequence.shape[0], dim = sequence.shape[1];
  if (steps < 1) throw ShapeMismatch("lstm needs at least one step");
  if (params.wx.shape.size() != 2 || params.wx.shape[1] != dim)
    throw ShapeMismatch("lstm input kernel does not match sequence features");
  const std::size_t units = params.wh.shape[1];
  if (params.wx.shape[0] != 4 * units || params.wh.shape[0] != 4 * units ||
      params.b.shape[0] != 4 * units)
    throw ShapeMismatch("lstm kernels disagree on unit count");
  require_finite(sequence, "lstm input");

  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  c.steps = steps;
  c.input_dim = dim;
  c.units = units;
  c.input_mask = dropout_mask(dim, input_dropout, training, rng);
  c.recurrent_mask = dropout_mask(units, recurrent_dropout, training, rng);
  c.xm.assign(steps * dim, 0.0);
  c.hm.assign(steps * units, 0.0);
  c.gates.assign(steps * 4 * units, 0.0);
  c.cell.assign(steps * units, 0.0);
  c.tanh_c.assign(steps * units, 0.0);

  std::vector<double> h(units, 0.0), cell(units, 0.0), z(4 * units);
  for (std::size_t t = 0; t < steps; ++t) {
    double* xm = c.xm.data() + t * dim;
    double* hm = c.hm.data() + t * units;
    const double* x = sequence.data() + t * dim;
    for (std::size_t d = 0; d < dim; ++d) xm[d] = x[d] * c.input_mask[d];
    for (std::size_t u = 0; u < units; ++u) hm[u] = h[u] * c.recurrent_mask[u];

    for (std::size_t r = 0; r < 4 * units; ++r)
      z[r] = params.b[r] + dot(params.wx.data() + r * dim, xm, dim) +
             dot(params.wh.data() + r * units, hm, units);

    double* gates = c.gates.data() + t * 4 * units;
    for (std::size_t u = 0; u < units; ++u) {
      const double gi = sigmoid(z[u]);
      const double gf = sigmoid(z[units + u]);
      const double gg = std::tanh(z[2 * units + u]);
      const double go = sigmoid(z[3 * units + u]);
      gates[u] = gi;
      gates[units + u] = gf;
      gates[2 * units + u] = gg;
      gates[3 * units + u] = go;
      cell[u] = gf * cell[u] + gi * gg;
      const double tc = std::tanh(cell[u]);
      c.cell[t * units + u] = cell[u];
      c.tanh_c[t * units + u] = tc;
      h[u] = go * tc;
    }
  }

  Tensor out{{units}, std::move(h)};
  require_finite(out, "lstm output");
  return out;
}

LstmGrads lstm_backward(const LstmParams& params, const LstmCache& cache,
                        const Tensor& final_hidden_grad) {
  const std::size_t steps = cache.steps, dim = cache.input_dim, units = cache.units;
  if (final_hidden_grad.shape.size() != 1 || final_hidden_grad.shape[0] != units)
    throw ShapeMismatch("lstm upstream gradient does not match units");
  require_finite(final_hidden_grad, "lstm upstream gradient");

  LstmGrads grads;
  grads.sequence = Tensor::zeros({steps, dim});
  grads.wx = Tensor::zeros(params.wx.shape);
  grads.wh = Tensor::zeros(params.wh.shape);
  grads.b = Tensor::zeros(params.b.shape);

  std::vector<double> dh(final_hidden_grad.values);
  std::vector<double> dc(units, 0.0), dz(4 * units);
  for (std::size_t ti = steps; ti-- > 0;) {
    const double* gates = cache.gates.data() + ti * 4 * units;
    const double* tanh_c = cache.tanh_c.data() + ti * units;
    const double* c_prev = ti > 0 ? cache.cell.data() + (ti - 1) * units : nullptr;
    for (std::size_t u = 0; u < units; ++u) {
      const double gi = gates[u], gf = gates[units + u];
      const double gg = gates[2 * units + u], go = gates[3 * units + u];
      const double tc = tanh_c[u];
      const double dout = dh[u] * tc;
      const double dcell = dc[u] + dh[u] * go * (1.0 - tc * tc);
      const double din = dcell * gg;
      const double dg = dcell * gi;
      const double df = dcell * (c_prev ? c_prev[u] : 0.0);
      dz[u] = din * gi * (1.0 - gi);
      dz[units + u] = df * gf * (1.0 - gf);
      dz[2 * units + u] = dg * (1.0 - gg * gg);
      dz[3 * units + u] = dout * go * (1.0 - go);
      dc[u] = dcell * gf;
    }

    const double* xm = cache.xm.data() + ti * dim;
    const double* hm = cache.hm.data() + ti * units;
    double* dseq = grads.sequence.data() + ti * dim;
    std::vector<double> dxm(dim, 0.0), dhm(units, 0.0);
    for (std::size_t r = 0; r < 4 * units; ++r) {
      grads.b[r] += dz[r];
      axpy(dz[r], xm, grads.wx.data() + r * dim, dim);
      axpy(dz[r], hm, grads.wh.data() + r * units, units);
      axpy(dz[r], params.wx.data() + r * dim, dxm.data(), dim);
      axpy(dz[r], params.wh.data() + r * units, dhm.data(), units);
    }
    for (std::size_t d = 0; d < dim; ++d) dseq[d] = dxm[d] * cache.input_mask[d];
    for (std::size_t u = 0; u < units; ++u) dh[u] = dhm[u] * cache.recurrent_mask[u];
  }
  return grads;
}

}  // namespace pathovox
