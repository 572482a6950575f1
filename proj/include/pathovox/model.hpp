#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "pathovox/audio.hpp"
#include "pathovox/label.hpp"
#include "pathovox/nn.hpp"
#include "pathovox/rng.hpp"
#include "pathovox/tensor.hpp"

namespace pathovox {

enum class LayerKind : int {
  conv1d_same = 0,
  maxpool1d = 1,
  flatten_per_step = 2,
  lstm = 3,
  dense = 4,
  softmax_dense = 5,
};

struct LayerSpec {
  LayerKind kind;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 0;
  std::size_t pool_size = 0;
  std::size_t units = 0;
  Activation activation = Activation::linear;
  double input_dropout_rate = 0.0;
  double recurrent_dropout_rate = 0.0;
};

/// Architecture hyperparameters. Defaults give the reference model:
/// two conv stacks (16x160, 13x320) with pool 4 after each, a 25-unit
/// LSTM over the segment sequence, two dense-32 layers and a 2-way
/// softmax output; 428,772 trainable parameters on 3200-sample frames.
struct ModelConfig {
  std::size_t frame_features = 3200;
  std::size_t conv1_filters = 16;
  std::size_t conv1_kernel = 160;
  std::size_t pool1 = 4;
  std::size_t conv2_filters = 13;
  std::size_t conv2_kernel = 320;
  std::size_t pool2 = 4;
  std::size_t lstm_units = 25;
  double lstm_input_dropout = 0.1;
  double lstm_recurrent_dropout = 0.5;
  std::vector<std::size_t> dense_units = {32, 32};
  std::size_t output_classes = 2;

  void validate() const;  // throws InvalidConfig
  bool operator==(const ModelConfig&) const = default;
};

struct Prediction {
  Label label;
  std::array<double, 2> probabilities;  // [pathological, healthy]
};

struct TraceEntry {
  std::string name;
  std::vector<std::size_t> shape;  // per-segment until the LSTM, then per-file
  std::size_t param_count;
};

/// The assembled network. Convolutions and pooling run independently on
/// every segment (time-distributed); the LSTM consumes the flattened
/// per-segment vectors as one sequence and only its final state feeds
/// the dense stack.
///
/// forward/backward share cached activations, so one instance must not
/// be trained from multiple threads; clone per thread instead.
class Model {
 public:
  Model(ModelConfig cfg, Rng& rng);
  Model(ModelConfig cfg, std::vector<Tensor> tensors);  // checkpoint restore

  const ModelConfig& config() const { return cfg_; }
  std::vector<LayerSpec> layer_specs() const;
  std::vector<TraceEntry> shape_trace() const;
  std::size_t trainable_count() const;
  std::size_t lstm_input_dim() const;

  /// Runs one file through the network; returns softmax probabilities.
  /// Dropout is active only when training is true (rng then supplies the
  /// per-sequence masks). Caches activations for backward().
  std::vector<double> forward(const SegmentMatrix& segments, bool training, Rng& rng);

  /// Backpropagates a gradient w.r.t. the output logits, filling
  /// gradients(). Requires a preceding forward(training = true).
  void backward(std::span<const double> logit_grad);

  Prediction predict_file(const SegmentMatrix& segments);

  /// Tensors in canonical order (conv stacks, lstm, dense stack, output).
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> gradients();

 private:
  void allocate_grads();

  ModelConfig cfg_;
  ConvParams conv1a_, conv1b_, conv2a_, conv2b_;
  LstmParams lstm_;
  std::vector<DenseParams> dense_;
  DenseParams output_;

  // gradient mirrors
  ConvParams g_conv1a_, g_conv1b_, g_conv2a_, g_conv2b_;
  LstmParams g_lstm_;
  std::vector<DenseParams> g_dense_;
  DenseParams g_output_;

  // forward caches (one file at a time)
  struct SegmentCache {
    Tensor x0, y1a, y1b, y2a, y2b;
    PoolResult p1, p2;
  };
  std::vector<SegmentCache> seg_cache_;
  Tensor sequence_;
  LstmCache lstm_cache_;
  Tensor lstm_out_;
  std::vector<Tensor> dense_out_;
  Tensor logits_;
  bool have_cache_ = false;
};

/// Builds and Glorot-initializes the model described by cfg.
Model build_model(const ModelConfig& cfg, Rng& rng);

/// Sum of closed-form per-layer parameter counts for a spec list whose
/// first conv layer sees input_channels channels. Empty list counts 0.
std::size_t trainable_count(const std::vector<LayerSpec>& specs, std::size_t input_channels);

/// Fixed-width layer table with per-layer shapes and counts; the last
/// line reads "total trainable parameters: N".
std::string render_layer_table(const std::vector<TraceEntry>& trace);

}  // namespace pathovox
