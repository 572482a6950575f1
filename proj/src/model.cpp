#include "pathovox/model.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace pathovox {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.values[i] += src.values[i];
}

std::string shape_text(const std::vector<std::size_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

}  // namespace

void ModelConfig::validate() const {
  if (frame_features < 1 || conv1_filters < 1 || conv1_kernel < 1 || conv2_filters < 1 ||
      conv2_kernel < 1 || pool1 < 1 || pool2 < 1 || lstm_units < 1)
    throw InvalidConfig("model sizes must be positive");
  if (output_classes < 2) throw InvalidConfig("output_classes must be at least 2");
  for (std::size_t u : dense_units)
    if (u < 1) throw InvalidConfig("dense widths must be positive");
  if (lstm_input_dropout < 0.0 || lstm_input_dropout >= 1.0 || lstm_recurrent_dropout < 0.0 ||
      lstm_recurrent_dropout >= 1.0)
    throw InvalidConfig("dropout rates must be in [0, 1)");
  if (frame_features < pool1 || frame_features / pool1 < pool2)
    throw InvalidConfig("frame_features too small for the pooling sizes");
}

Model::Model(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t f1 = cfg_.conv1_filters, k1 = cfg_.conv1_kernel;
  const std::size_t f2 = cfg_.conv2_filters, k2 = cfg_.conv2_kernel;
  const std::size_t dim = lstm_input_dim(), units = cfg_.lstm_units;

  auto conv = [&rng](std::size_t out, std::size_t in, std::size_t k) {
    return ConvParams{glorot_uniform_init(in * k, out * k, {out, in, k}, rng),
                      Tensor::zeros({out})};
  };
  conv1a_ = conv(f1, 1, k1);
  conv1b_ = conv(f1, f1, k1);
  conv2a_ = conv(f2, f1, k2);
  conv2b_ = conv(f2, f2, k2);

  lstm_.wx = glorot_uniform_init(dim, 4 * units, {4 * units, dim}, rng);
  lstm_.wh = glorot_uniform_init(units, 4 * units, {4 * units, units}, rng);
  lstm_.b = Tensor::zeros({4 * units});

  std::size_t in = units;
  for (std::size_t width : cfg_.dense_units) {
    dense_.push_back({glorot_uniform_init(in, width, {width, in}, rng), Tensor::zeros({width})});
    in = width;
  }
  output_ = {glorot_uniform_init(in, cfg_.output_classes, {cfg_.output_classes, in}, rng),
             Tensor::zeros({cfg_.output_classes})};
  allocate_grads();
}

Model::Model(ModelConfig cfg, std::vector<Tensor> tensors) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng scratch(0);
  Model expected(cfg_, scratch);
  auto slots = expected.parameters();
  if (tensors.size() != slots.size())
    throw ShapeMismatch("tensor count does not match the model layout");
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (tensors[i].shape != slots[i]->shape)
      throw ShapeMismatch("tensor shape does not match the model layout");

  *this = std::move(expected);
  auto mine = parameters();
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] = std::move(tensors[i]);
}

void Model::allocate_grads() {
  auto like = [](const Tensor& t) { return Tensor::zeros(t.shape); };
  g_conv1a_ = {like(conv1a_.w), like(conv1a_.b)};
  g_conv1b_ = {like(conv1b_.w), like(conv1b_.b)};
  g_conv2a_ = {like(conv2a_.w), like(conv2a_.b)};
  g_conv2b_ = {like(conv2b_.w), like(conv2b_.b)};
  g_lstm_ = {like(lstm_.wx), like(lstm_.wh), like(lstm_.b)};
  g_dense_.clear();
  for (const auto& d : dense_) g_dense_.push_back({like(d.w), like(d.b)});
  g_output_ = {like(output_.w), like(output_.b)};
}

std::size_t Model::lstm_input_dim() const {
  return cfg_.conv2_filters * (cfg_.frame_features / cfg_.pool1 / cfg_.pool2);
}

std::vector<LayerSpec> Model::layer_specs() const {
  std::vector<LayerSpec> specs;
  auto conv = [](std::size_t filters, std::size_t kernel) {
    LayerSpec s;
    s.kind = LayerKind::conv1d_same;
    s.out_channels = filters;
    s.kernel_size = kernel;
    s.activation = Activation::relu;
    return s;
  };
  specs.push_back(conv(cfg_.conv1_filters, cfg_.conv1_kernel));
  specs.push_back(conv(cfg_.conv1_filters, cfg_.conv1_kernel));
  specs.push_back({.kind = LayerKind::maxpool1d, .pool_size = cfg_.pool1});
  specs.push_back(conv(cfg_.conv2_filters, cfg_.conv2_kernel));
  specs.push_back(conv(cfg_.conv2_filters, cfg_.conv2_kernel));
  specs.push_back({.kind = LayerKind::maxpool1d, .pool_size = cfg_.pool2});
  specs.push_back({.kind = LayerKind::flatten_per_step});
  LayerSpec lstm;
  lstm.kind = LayerKind::lstm;
  lstm.units = cfg_.lstm_units;
  lstm.activation = Activation::tanh;
  lstm.input_dropout_rate = cfg_.lstm_input_dropout;
  lstm.recurrent_dropout_rate = cfg_.lstm_recurrent_dropout;
  specs.push_back(lstm);
  for (std::size_t width : cfg_.dense_units) {
    LayerSpec d;
    d.kind = LayerKind::dense;
    d.units = width;
    d.activation = Activation::relu;
    specs.push_back(d);
  }
  LayerSpec out;
  out.kind = LayerKind::softmax_dense;
  out.units = cfg_.output_classes;
  specs.push_back(out);
  return specs;
}

std::size_t trainable_count(const std::vector<LayerSpec>& specs, std::size_t input_features) {
  std::size_t total = 0;
  std::size_t channels = 1, length = input_features, dim = input_features;
  for (const LayerSpec& spec : specs) {
    switch (spec.kind) {
      case LayerKind::conv1d_same:
        total += conv_param_count(spec.out_channels, channels, spec.kernel_size);
        channels = spec.out_channels;
        break;
      case LayerKind::maxpool1d:
        length /= spec.pool_size;
        break;
      case LayerKind::flatten_per_step:
        dim = channels * length;
        break;
      case LayerKind::lstm:
        total += lstm_param_count(spec.units, dim);
        dim = spec.units;
        break;
      case LayerKind::dense:
      case LayerKind::softmax_dense:
        total += dense_param_count(spec.units, dim);
        dim = spec.units;
        break;
    }
  }
  return total;
}

std::size_t Model::trainable_count() const {
  return pathovox::trainable_count(layer_specs(), cfg_.frame_features);
}

std::vector<TraceEntry> Model::shape_trace() const {
  std::vector<TraceEntry> trace;
  const std::size_t p1_len = cfg_.frame_features / cfg_.pool1;
  const std::size_t p2_len = p1_len / cfg_.pool2;
  const std::size_t dim = lstm_input_dim();

  trace.push_back({"input", {cfg_.frame_features}, 0});
  const auto conv_name = [](std::size_t f, std::size_t k) {
    return "conv1d_same(" + std::to_string(f) + "x" + std::to_string(k) + ")";
  };
  trace.push_back({conv_name(cfg_.conv1_filters, cfg_.conv1_kernel),
                   {cfg_.conv1_filters, cfg_.frame_features},
                   conv_param_count(cfg_.conv1_filters, 1, cfg_.conv1_kernel)});
  trace.push_back({conv_name(cfg_.conv1_filters, cfg_.conv1_kernel),
                   {cfg_.conv1_filters, cfg_.frame_features},
                   conv_param_count(cfg_.conv1_filters, cfg_.conv1_filters, cfg_.conv1_kernel)});
  trace.push_back(
      {"maxpool1d(" + std::to_string(cfg_.pool1) + ")", {cfg_.conv1_filters, p1_len}, 0});
  trace.push_back({conv_name(cfg_.conv2_filters, cfg_.conv2_kernel),
                   {cfg_.conv2_filters, p1_len},
                   conv_param_count(cfg_.conv2_filters, cfg_.conv1_filters, cfg_.conv2_kernel)});
  trace.push_back({conv_name(cfg_.conv2_filters, cfg_.conv2_kernel),
                   {cfg_.conv2_filters, p1_len},
                   conv_param_count(cfg_.conv2_filters, cfg_.conv2_filters, cfg_.conv2_kernel)});
  trace.push_back(
      {"maxpool1d(" + std::to_string(cfg_.pool2) + ")", {cfg_.conv2_filters, p2_len}, 0});
  trace.push_back({"flatten_per_step", {dim}, 0});
  trace.push_back({"lstm(" + std::to_string(cfg_.lstm_units) + ")",
                   {cfg_.lstm_units},
                   lstm_param_count(cfg_.lstm_units, dim)});
  std::size_t in = cfg_.lstm_units;
  for (std::size_t width : cfg_.dense_units) {
    trace.push_back({"dense(" + std::to_string(width) + ")", {width},
                     dense_param_count(width, in)});
    in = width;
  }
  trace.push_back({"softmax_dense(" + std::to_string(cfg_.output_classes) + ")",
                   {cfg_.output_classes},
                   dense_param_count(cfg_.output_classes, in)});
  return trace;
}

std::vector<double> Model::forward(const SegmentMatrix& segments, bool training, Rng& rng) {
  if (segments.cols != cfg_.frame_features)
    throw ShapeMismatch("segment width " + std::to_string(segments.cols) +
                        " does not match model input " + std::to_string(cfg_.frame_features));
  if (segments.rows < 1) throw ShapeMismatch("need at least one segment");

  const std::size_t n = segments.rows;
  const std::size_t flat = lstm_input_dim();
  seg_cache_.clear();
  seg_cache_.resize(n);
  sequence_ = Tensor::zeros({n, flat});

  for (std::size_t s = 0; s < n; ++s) {
    SegmentCache& sc = seg_cache_[s];
    sc.x0 = Tensor{{1, cfg_.frame_features},
                   std::vector<double>(segments.row(s), segments.row(s) + segments.cols)};
    sc.y1a = conv1d_same_forward(sc.x0, conv1a_, Activation::relu);
    sc.y1b = conv1d_same_forward(sc.y1a, conv1b_, Activation::relu);
    sc.p1 = maxpool1d_forward(sc.y1b, cfg_.pool1);
    sc.y2a = conv1d_same_forward(sc.p1.output, conv2a_, Activation::relu);
    sc.y2b = conv1d_same_forward(sc.y2a, conv2b_, Activation::relu);
    sc.p2 = maxpool1d_forward(sc.y2b, cfg_.pool2);
    std::copy(sc.p2.output.values.begin(), sc.p2.output.values.end(),
              sequence_.data() + s * flat);
  }

  lstm_out_ = lstm_forward(sequence_, lstm_, cfg_.lstm_input_dropout, cfg_.lstm_recurrent_dropout,
                           training, rng, &lstm_cache_);

  dense_out_.clear();
  const Tensor* h = &lstm_out_;
  for (const DenseParams& layer : dense_) {
    dense_out_.push_back(dense_forward(*h, layer, Activation::relu));
    h = &dense_out_.back();
  }
  logits_ = dense_forward(*h, output_, Activation::linear);
  have_cache_ = true;
  return softmax(std::span<const double>(logits_.values));
}

void Model::backward(std::span<const double> logit_grad) {
  if (!have_cache_) throw Error("backward called without a forward pass");
  if (logit_grad.size() != cfg_.output_classes)
    throw ShapeMismatch("logit gradient does not match output classes");
  allocate_grads();

  const Tensor dlogits{{cfg_.output_classes},
                       std::vector<double>(logit_grad.begin(), logit_grad.end())};
  const Tensor& out_in = dense_.empty() ? lstm_out_ : dense_out_.back();
  DenseGrads og = dense_backward(out_in, output_, logits_, dlogits, Activation::linear);
  g_output_.w = std::move(og.w);
  g_output_.b = std::move(og.b);
  Tensor dh = std::move(og.input);
  for (std::size_t i = dense_.size(); i-- > 0;) {
    const Tensor& in = i == 0 ? lstm_out_ : dense_out_[i - 1];
    DenseGrads dg = dense_backward(in, dense_[i], dense_out_[i], dh, Activation::relu);
    g_dense_[i].w = std::move(dg.w);
    g_dense_[i].b = std::move(dg.b);
    dh = std::move(dg.input);
  }

  LstmGrads lg = lstm_backward(lstm_, lstm_cache_, dh);
  g_lstm_.wx = std::move(lg.wx);
  g_lstm_.wh = std::move(lg.wh);
  g_lstm_.b = std::move(lg.b);

  const std::size_t n = seg_cache_.size();
  const std::size_t p1_len = cfg_.frame_features / cfg_.pool1;
  const std::size_t p2_len = p1_len / cfg_.pool2;
  const std::size_t flat = lstm_input_dim();
  for (std::size_t s = 0; s < n; ++s) {
    const SegmentCache& sc = seg_cache_[s];
    Tensor dflat{{cfg_.conv2_filters, p2_len},
                 std::vector<double>(lg.sequence.data() + s * flat,
                                     lg.sequence.data() + (s + 1) * flat)};
    Tensor dy2b = maxpool1d_backward(sc.p2, {cfg_.conv2_filters, p1_len}, dflat);
    ConvGrads c2b = conv1d_same_backward(sc.y2a, conv2b_, sc.y2b, dy2b, Activation::relu);
    add_into(g_conv2b_.w, c2b.w);
    add_into(g_conv2b_.b, c2b.b);
    ConvGrads c2a = conv1d_same_backward(sc.p1.output, conv2a_, sc.y2a, c2b.input,
                                         Activation::relu);
    add_into(g_conv2a_.w, c2a.w);
    add_into(g_conv2a_.b, c2a.b);
    Tensor dy1b = maxpool1d_backward(sc.p1, {cfg_.conv1_filters, cfg_.frame_features}, c2a.input);
    ConvGrads c1b = conv1d_same_backward(sc.y1a, conv1b_, sc.y1b, dy1b, Activation::relu);
    add_into(g_conv1b_.w, c1b.w);
    add_into(g_conv1b_.b, c1b.b);
    ConvGrads c1a = conv1d_same_backward(sc.x0, conv1a_, sc.y1a, c1b.input, Activation::relu,
                                         /*need_input_grad=*/false);
    add_into(g_conv1a_.w, c1a.w);
    add_into(g_conv1a_.b, c1a.b);
  }
}

Prediction Model::predict_file(const SegmentMatrix& segments) {
  if (cfg_.output_classes != 2)
    throw InvalidConfig("predict_file requires a 2-class model");
  Rng unused(0);
  const std::vector<double> p = forward(segments, /*training=*/false, unused);
  // ties break toward pathological (class 0)
  const Label label = p[0] >= p[1] ? Label::pathological : Label::healthy;
  return Prediction{label, {p[0], p[1]}};
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out = {&conv1a_.w, &conv1a_.b, &conv1b_.w, &conv1b_.b,
                              &conv2a_.w, &conv2a_.b, &conv2b_.w, &conv2b_.b,
                              &lstm_.wx,  &lstm_.wh,  &lstm_.b};
  for (auto& d : dense_) {
    out.push_back(&d.w);
    out.push_back(&d.b);
  }
  out.push_back(&output_.w);
  out.push_back(&output_.b);
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  auto mutable_view = const_cast<Model*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

std::vector<Tensor*> Model::gradients() {
  std::vector<Tensor*> out = {&g_conv1a_.w, &g_conv1a_.b, &g_conv1b_.w, &g_conv1b_.b,
                              &g_conv2a_.w, &g_conv2a_.b, &g_conv2b_.w, &g_conv2b_.b,
                              &g_lstm_.wx,  &g_lstm_.wh,  &g_lstm_.b};
  for (auto& d : g_dense_) {
    out.push_back(&d.w);
    out.push_back(&d.b);
  }
  out.push_back(&g_output_.w);
  out.push_back(&g_output_.b);
  return out;
}

Model build_model(const ModelConfig& cfg, Rng& rng) { return Model(cfg, rng); }

std::string render_layer_table(const std::vector<TraceEntry>& trace) {
  std::size_t name_width = 5, shape_width = 12;
  for (const TraceEntry& e : trace) {
    name_width = std::max(name_width, e.name.size());
    shape_width = std::max(shape_width, shape_text(e.shape).size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width + 2)) << "layer"
      << std::setw(static_cast<int>(shape_width + 2)) << "output shape" << std::right
      << std::setw(10) << "params" << '\n';
  std::size_t total = 0;
  for (const TraceEntry& e : trace) {
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << e.name
        << std::setw(static_cast<int>(shape_width + 2)) << shape_text(e.shape) << std::right
        << std::setw(10) << e.param_count << '\n';
    total += e.param_count;
  }
  out << "total trainable parameters: " << total << '\n';
  return out.str();
}

}  // namespace pathovox
