#include "pathovox/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pathovox {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfig("invalid number for " + key + ": '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidConfig("invalid integer for " + key + ": '" + value + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidConfig("invalid integer for " + key + ": '" + value + "'");
  return v;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw InvalidConfig("empty item in list for " + key);
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  }
  if (out.empty()) throw InvalidConfig("empty list for " + key);
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse(in, path.string());
}

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig(origin + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key == "frame_ms") cfg.frame.frame_ms = parse_double(key, value);
    else if (key == "overlap_ms") cfg.frame.overlap_ms = parse_double(key, value);
    else if (key == "window") {
      if (value == "hamming") cfg.frame.window = WindowKind::hamming;
      else if (value == "rectangular") cfg.frame.window = WindowKind::rectangular;
      else throw InvalidConfig("unknown window kind: '" + value + "'");
    }
    else if (key == "frame_features") cfg.model.frame_features = parse_u64(key, value);
    else if (key == "conv1_filters") cfg.model.conv1_filters = parse_u64(key, value);
    else if (key == "conv1_kernel") cfg.model.conv1_kernel = parse_u64(key, value);
    else if (key == "pool1") cfg.model.pool1 = parse_u64(key, value);
    else if (key == "conv2_filters") cfg.model.conv2_filters = parse_u64(key, value);
    else if (key == "conv2_kernel") cfg.model.conv2_kernel = parse_u64(key, value);
    else if (key == "pool2") cfg.model.pool2 = parse_u64(key, value);
    else if (key == "lstm_units") cfg.model.lstm_units = parse_u64(key, value);
    else if (key == "lstm_input_dropout") cfg.model.lstm_input_dropout = parse_double(key, value);
    else if (key == "lstm_recurrent_dropout")
      cfg.model.lstm_recurrent_dropout = parse_double(key, value);
    else if (key == "dense_units") cfg.model.dense_units = parse_size_list(key, value);
    else if (key == "output_classes") cfg.model.output_classes = parse_u64(key, value);
    else if (key == "max_epochs") cfg.train.max_epochs = parse_int(key, value);
    else if (key == "seed") cfg.set_seed(parse_u64(key, value));
    else if (key == "initial_lr") cfg.train.initial_lr = parse_double(key, value);
    else if (key == "lr_patience") cfg.train.lr_patience = parse_int(key, value);
    else if (key == "lr_factor") cfg.train.lr_factor = parse_double(key, value);
    else if (key == "min_lr") cfg.train.min_lr = parse_double(key, value);
    else if (key == "stop_patience") cfg.train.stop_patience = parse_int(key, value);
    else if (key == "train_fraction") cfg.split.train_fraction = parse_double(key, value);
    else if (key == "val_fraction") cfg.split.val_fraction = parse_double(key, value);
    else throw InvalidConfig(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  split.seed = seed;
}

void RunConfig::validate() const {
  frame.validate();
  model.validate();
  train.validate();
  split.validate();
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "frame_ms=" << format_double(frame.frame_ms) << '\n';
  out << "overlap_ms=" << format_double(frame.overlap_ms) << '\n';
  out << "window=" << (frame.window == WindowKind::hamming ? "hamming" : "rectangular") << '\n';
  out << "frame_features=" << model.frame_features << '\n';
  out << "conv1_filters=" << model.conv1_filters << '\n';
  out << "conv1_kernel=" << model.conv1_kernel << '\n';
  out << "pool1=" << model.pool1 << '\n';
  out << "conv2_filters=" << model.conv2_filters << '\n';
  out << "conv2_kernel=" << model.conv2_kernel << '\n';
  out << "pool2=" << model.pool2 << '\n';
  out << "lstm_units=" << model.lstm_units << '\n';
  out << "lstm_input_dropout=" << format_double(model.lstm_input_dropout) << '\n';
  out << "lstm_recurrent_dropout=" << format_double(model.lstm_recurrent_dropout) << '\n';
  out << "dense_units=";
  for (std::size_t i = 0; i < model.dense_units.size(); ++i)
    out << (i ? "," : "") << model.dense_units[i];
  out << '\n';
  out << "output_classes=" << model.output_classes << '\n';
  out << "max_epochs=" << train.max_epochs << '\n';
  out << "seed=" << train.seed << '\n';
  out << "initial_lr=" << format_double(train.initial_lr) << '\n';
  out << "lr_patience=" << train.lr_patience << '\n';
  out << "lr_factor=" << format_double(train.lr_factor) << '\n';
  out << "min_lr=" << format_double(train.min_lr) << '\n';
  out << "stop_patience=" << train.stop_patience << '\n';
  out << "train_fraction=" << format_double(split.train_fraction) << '\n';
  out << "val_fraction=" << format_double(split.val_fraction) << '\n';
  return out.str();
}

}  // namespace pathovox
