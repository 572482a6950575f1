#include <doctest.h>

#include <sstream>

#include "pathovox/run_config.hpp"
#include "test_util.hpp"

using namespace pathovox;
using testutil::TempDir;

TEST_CASE("defaults are the reference values") {
  const RunConfig cfg;
  CHECK(cfg.frame.frame_ms == 64.0);
  CHECK(cfg.frame.overlap_ms == 30.0);
  CHECK(cfg.frame.window == WindowKind::hamming);
  CHECK(cfg.model.frame_features == 3200);
  CHECK(cfg.model.conv1_filters == 16);
  CHECK(cfg.model.conv1_kernel == 160);
  CHECK(cfg.model.conv2_filters == 13);
  CHECK(cfg.model.conv2_kernel == 320);
  CHECK(cfg.model.lstm_units == 25);
  CHECK(cfg.model.lstm_input_dropout == 0.1);
  CHECK(cfg.model.lstm_recurrent_dropout == 0.5);
  CHECK(cfg.model.dense_units == std::vector<std::size_t>{32, 32});
  CHECK(cfg.train.max_epochs == 34);
  CHECK(cfg.train.initial_lr == 6e-5);
  CHECK(cfg.train.lr_patience == 8);
  CHECK(cfg.train.lr_factor == 0.5);
  CHECK(cfg.train.min_lr == 1e-7);
  CHECK(cfg.train.stop_patience == 20);
  CHECK(cfg.split.train_fraction == 0.70);
  CHECK(cfg.split.val_fraction == 0.15);
}

TEST_CASE("parsing applies overrides and keeps the rest") {
  std::istringstream in(
      "# desk-scale run\n"
      "frame_features = 512\n"
      "conv1_kernel=31\n"
      "conv2_kernel=63\n"
      "\n"
      "dense_units=16, 8\n"
      "initial_lr=1e-3\n"
      "seed=99\n"
      "window=rectangular\n");
  const RunConfig cfg = RunConfig::parse(in, "<test>");
  CHECK(cfg.model.frame_features == 512);
  CHECK(cfg.model.conv1_kernel == 31);
  CHECK(cfg.model.conv2_kernel == 63);
  CHECK(cfg.model.dense_units == std::vector<std::size_t>{16, 8});
  CHECK(cfg.train.initial_lr == 1e-3);
  CHECK(cfg.train.seed == 99);
  CHECK(cfg.split.seed == 99);
  CHECK(cfg.frame.window == WindowKind::rectangular);
  // untouched defaults survive
  CHECK(cfg.model.conv1_filters == 16);
  CHECK(cfg.train.stop_patience == 20);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  std::istringstream unknown("learning_rate=0.1\n");
  CHECK_THROWS_AS(RunConfig::parse(unknown, "<test>"), InvalidConfig);

  std::istringstream bad_number("initial_lr=fast\n");
  CHECK_THROWS_AS(RunConfig::parse(bad_number, "<test>"), InvalidConfig);

  std::istringstream bad_int("lstm_units=3.5\n");
  CHECK_THROWS_AS(RunConfig::parse(bad_int, "<test>"), InvalidConfig);

  std::istringstream no_equals("frame_features\n");
  CHECK_THROWS_AS(RunConfig::parse(no_equals, "<test>"), InvalidConfig);

  std::istringstream bad_window("window=hann\n");
  CHECK_THROWS_AS(RunConfig::parse(bad_window, "<test>"), InvalidConfig);

  std::istringstream invalid_value("overlap_ms=100\n");
  CHECK_THROWS_AS(RunConfig::parse(invalid_value, "<test>"), InvalidConfig);
}

TEST_CASE("echo round-trips through the parser") {
  RunConfig cfg;
  cfg.model.frame_features = 512;
  cfg.model.conv1_kernel = 31;
  cfg.model.conv2_kernel = 63;
  cfg.train.initial_lr = 1e-3;
  cfg.set_seed(1234);
  cfg.model.dense_units = {32, 16};

  std::istringstream in(cfg.echo());
  const RunConfig parsed = RunConfig::parse(in, "<echo>");
  CHECK(parsed.frame.frame_ms == cfg.frame.frame_ms);
  CHECK(parsed.model == cfg.model);
  CHECK(parsed.train == cfg.train);
  CHECK(parsed.split.train_fraction == cfg.split.train_fraction);
  CHECK(parsed.split.seed == cfg.split.seed);
}

TEST_CASE("load reads from disk and reports missing files") {
  TempDir dir("cfg");
  const std::string text = "seed=7\nmax_epochs=2\n";
  testutil::write_bytes(dir / "run.cfg", {text.begin(), text.end()});
  const RunConfig cfg = RunConfig::load(dir / "run.cfg");
  CHECK(cfg.train.max_epochs == 2);
  CHECK(cfg.train.seed == 7);

  CHECK_THROWS_AS(RunConfig::load(dir / "missing.cfg"), IoError);
}
