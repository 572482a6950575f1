#include "pathovox/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pathovox {

namespace {

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw CheckpointError("checkpoint truncated");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CheckpointError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.values) put_f64(out, v);
}

Tensor get_tensor(std::istream& in) {
  const std::uint32_t ndims = get_u32(in);
  if (ndims == 0 || ndims > 4) throw CheckpointError("checkpoint tensor rank is implausible");
  std::vector<std::size_t> shape(ndims);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = get_u32(in);
    if (d == 0) throw CheckpointError("checkpoint tensor has a zero dimension");
    count *= d;
  }
  if (count > (std::size_t{1} << 28)) throw CheckpointError("checkpoint tensor is implausibly large");
  std::vector<double> values(count);
  for (double& v : values) v = get_f64(in);
  return Tensor{std::move(shape), std::move(values)};
}

std::size_t tensors_per_kind(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d_same: return 2;
    case LayerKind::lstm: return 3;
    case LayerKind::dense:
    case LayerKind::softmax_dense: return 2;
    default: return 0;
  }
}

struct LoadedLayer {
  LayerSpec spec;
  std::uint32_t flatten_frame_features = 0;
  std::vector<Tensor> tensors;
};

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create checkpoint " + path.string());

  const std::vector<LayerSpec> specs = model.layer_specs();
  const std::vector<const Tensor*> params = model.parameters();

  out.write("PVOX", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(specs.size()));

  std::size_t next = 0;
  for (const LayerSpec& spec : specs) {
    put_u8(out, static_cast<std::uint8_t>(spec.kind));
    switch (spec.kind) {
      case LayerKind::conv1d_same:
      case LayerKind::dense:
      case LayerKind::softmax_dense:
        put_u8(out, static_cast<std::uint8_t>(spec.activation));
        break;
      case LayerKind::maxpool1d:
        put_u32(out, static_cast<std::uint32_t>(spec.pool_size));
        break;
      case LayerKind::flatten_per_step:
        put_u32(out, static_cast<std::uint32_t>(model.config().frame_features));
        break;
      case LayerKind::lstm:
        put_f64(out, spec.input_dropout_rate);
        put_f64(out, spec.recurrent_dropout_rate);
        break;
    }
    for (std::size_t i = 0; i < tensors_per_kind(spec.kind); ++i) put_tensor(out, *params[next++]);
  }
  if (next != params.size()) throw CheckpointError("internal: layer walk missed tensors");
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PVOX", 4) != 0)
    throw CheckpointError(path.string() + ": bad checkpoint magic");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  const std::uint32_t layer_count = get_u32(in);
  if (layer_count < 4 || layer_count > 64)
    throw CheckpointError(path.string() + ": implausible layer count");

  std::vector<LoadedLayer> layers;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LoadedLayer layer;
    const std::uint8_t kind_tag = get_u8(in);
    if (kind_tag > static_cast<std::uint8_t>(LayerKind::softmax_dense))
      throw CheckpointError(path.string() + ": unknown layer kind tag");
    layer.spec.kind = static_cast<LayerKind>(kind_tag);
    switch (layer.spec.kind) {
      case LayerKind::conv1d_same:
      case LayerKind::dense:
      case LayerKind::softmax_dense: {
        const std::uint8_t act = get_u8(in);
        if (act > 2) throw CheckpointError(path.string() + ": unknown activation tag");
        layer.spec.activation = static_cast<Activation>(act);
        break;
      }
      case LayerKind::maxpool1d:
        layer.spec.pool_size = get_u32(in);
        break;
      case LayerKind::flatten_per_step:
        layer.flatten_frame_features = get_u32(in);
        break;
      case LayerKind::lstm:
        layer.spec.input_dropout_rate = get_f64(in);
        layer.spec.recurrent_dropout_rate = get_f64(in);
        break;
    }
    for (std::size_t t = 0; t < tensors_per_kind(layer.spec.kind); ++t)
      layer.tensors.push_back(get_tensor(in));
    layers.push_back(std::move(layer));
  }

  // Reconstruct the configuration from the fixed layer sequence:
  // conv conv pool conv conv pool flatten lstm dense* softmax_dense.
  auto expect = [&](std::size_t i, LayerKind kind) -> const LoadedLayer& {
    if (i >= layers.size() || layers[i].spec.kind != kind)
      throw CheckpointError(path.string() + ": unexpected layer sequence");
    return layers[i];
  };

  ModelConfig cfg;
  const LoadedLayer& c1a = expect(0, LayerKind::conv1d_same);
  expect(1, LayerKind::conv1d_same);
  const LoadedLayer& p1 = expect(2, LayerKind::maxpool1d);
  const LoadedLayer& c2a = expect(3, LayerKind::conv1d_same);
  expect(4, LayerKind::conv1d_same);
  const LoadedLayer& p2 = expect(5, LayerKind::maxpool1d);
  const LoadedLayer& flat = expect(6, LayerKind::flatten_per_step);
  const LoadedLayer& lstm = expect(7, LayerKind::lstm);
  if (layers.size() < 9) throw CheckpointError(path.string() + ": missing dense stack");
  if (c1a.tensors[0].shape.size() != 3 || c2a.tensors[0].shape.size() != 3 ||
      lstm.tensors[1].shape.size() != 2)
    throw CheckpointError(path.string() + ": parameter tensor ranks are inconsistent");

  cfg.conv1_filters = c1a.tensors[0].shape[0];
  cfg.conv1_kernel = c1a.tensors[0].shape[2];
  cfg.pool1 = p1.spec.pool_size;
  cfg.conv2_filters = c2a.tensors[0].shape[0];
  cfg.conv2_kernel = c2a.tensors[0].shape[2];
  cfg.pool2 = p2.spec.pool_size;
  cfg.frame_features = flat.flatten_frame_features;
  cfg.lstm_units = lstm.tensors[1].shape[1];
  cfg.lstm_input_dropout = lstm.spec.input_dropout_rate;
  cfg.lstm_recurrent_dropout = lstm.spec.recurrent_dropout_rate;
  cfg.dense_units.clear();
  for (std::size_t i = 8; i + 1 < layers.size(); ++i) {
    const LoadedLayer& d = expect(i, LayerKind::dense);
    cfg.dense_units.push_back(d.tensors[0].shape[0]);
  }
  const LoadedLayer& out_layer = expect(layers.size() - 1, LayerKind::softmax_dense);
  cfg.output_classes = out_layer.tensors[0].shape[0];

  std::vector<Tensor> tensors;
  for (LoadedLayer& layer : layers)
    for (Tensor& t : layer.tensors) tensors.push_back(std::move(t));

  try {
    return Model(std::move(cfg), std::move(tensors));
  } catch (const Error& e) {
    throw CheckpointError(path.string() + ": inconsistent checkpoint: " + e.what());
  }
}

}  // namespace pathovox
