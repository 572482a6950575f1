#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pathovox/checkpoint.hpp"
#include "pathovox/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pathovox;

namespace {

enum class LogLevel : int { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("PATHOVOX_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "error") return LogLevel::error;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

void log_at(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) <= static_cast<int>(log_level()))
    std::cerr << "pathovox: " << message << '\n';
}

void log_info(const std::string& message) { log_at(LogLevel::info, message); }
void log_debug(const std::string& message) { log_at(LogLevel::debug, message); }

void echo_config(const RunConfig& cfg) {
  std::istringstream lines(cfg.echo());
  std::string line;
  while (std::getline(lines, line)) log_info("config " + line);
}

void require_input_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw InvalidConfig(what + " not found: " + path.string());
}

/// Usage and validation problems exit 2, runtime failures 1.
int exit_code_for(const Error& e) {
  if (dynamic_cast<const InvalidConfig*>(&e) || dynamic_cast<const MalformedHeader*>(&e) ||
      dynamic_cast<const UnsupportedFormat*>(&e) || dynamic_cast<const MalformedRow*>(&e) ||
      dynamic_cast<const UnknownLabel*>(&e) || dynamic_cast<const EmptyClass*>(&e) ||
      dynamic_cast<const InsufficientHealthy*>(&e) || dynamic_cast<const CheckpointError*>(&e) ||
      dynamic_cast<const InvalidLength*>(&e) || dynamic_cast<const EmptyMatrix*>(&e))
    return 2;
  return 1;
}

struct SplitArgs {
  std::string manifest, out;
  double train = 0.70, val = 0.15;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& args) {
  require_input_file(args.manifest, "manifest");
  log_info("config manifest=" + args.manifest);
  log_info("config train_fraction=" + std::to_string(args.train));
  log_info("config val_fraction=" + std::to_string(args.val));
  log_info("config seed=" + std::to_string(args.seed));

  SplitSpec spec;
  spec.train_fraction = args.train;
  spec.val_fraction = args.val;
  spec.seed = args.seed;
  const Manifest annotated = make_split(load_manifest(args.manifest), spec);
  save_manifest(annotated, args.out);

  const SplitCounts c = count_by_split(annotated);
  std::printf("train %zu/%zu val %zu/%zu test %zu/%zu\n", c.train_healthy, c.train_pathological,
              c.val_healthy, c.val_pathological, c.test_healthy, c.test_pathological);
  return 0;
}

struct TrainArgs {
  std::string manifest, config, out_model, log;
};

int cmd_train(const TrainArgs& args) {
  require_input_file(args.manifest, "manifest");
  RunConfig cfg;
  if (!args.config.empty()) {
    require_input_file(args.config, "config");
    cfg = RunConfig::load(args.config);
  }
  echo_config(cfg);

  try {
    int last_logged = 0;
    const auto observer = [&last_logged](const EpochLog& log) {
      std::ostringstream line;
      line << "epoch " << log.epoch << " train_loss " << log.train_loss << " val_loss "
           << log.val_loss << " val_accuracy " << log.val_accuracy << " lr "
           << log.learning_rate;
      log_debug(line.str());
      last_logged = log.epoch;
      return true;
    };
    const TrainSummary summary =
        train_from_manifest(args.manifest, cfg, args.out_model, args.log, observer);
    const TrainResult& r = summary.result;
    const EpochLog& best = r.logs.at(static_cast<std::size_t>(r.best_epoch) - 1);
    std::printf("trained %d epoch(s) on %zu files (%zu validation)\n", last_logged,
                summary.train_files, summary.val_files);
    std::printf("best epoch %d: val loss %.6f, val accuracy %.4f\n", r.best_epoch,
                r.best_val_loss, best.val_accuracy);
    std::printf("checkpoint written to %s\n", args.out_model.c_str());
    return 0;
  } catch (...) {
    // drop partial outputs so a failed run leaves nothing half-written
    std::error_code ec;
    fs::remove(args.out_model, ec);
    fs::remove(args.out_model + ".json", ec);
    fs::remove(args.out_model + ".tmp", ec);
    throw;
  }
}

struct EvaluateArgs {
  std::string model, manifest, subset = "test", report_path, config;
};

int cmd_evaluate(const EvaluateArgs& args) {
  require_input_file(args.model, "model checkpoint");
  require_input_file(args.manifest, "manifest");
  FrameConfig frame;
  if (!args.config.empty()) {
    require_input_file(args.config, "config");
    frame = RunConfig::load(args.config).frame;
  }
  log_info("config model=" + args.model + " manifest=" + args.manifest +
           " subset=" + args.subset);

  const EvalSummary summary =
      evaluate_checkpoint(args.model, args.manifest, parse_split(args.subset), frame);
  if (!args.report_path.empty()) {
    std::ofstream out(args.report_path);
    if (!out) throw IoError("cannot create report " + args.report_path);
    out << render_report(summary.report, ReportFormat::json);
  }
  std::printf("%zu files, mean loss %.6f\n\n", summary.file_count, summary.mean_loss);
  std::fputs(render_report(summary.report, ReportFormat::text).c_str(), stdout);
  return 0;
}

struct InspectArgs {
  std::string config, model;
};

int cmd_inspect(const InspectArgs& args) {
  if (args.config.empty() == args.model.empty())
    throw InvalidConfig("inspect needs exactly one of --config or --model");
  if (!args.model.empty()) {
    require_input_file(args.model, "model checkpoint");
    const Model model = load_checkpoint(args.model);
    std::fputs(render_layer_table(model.shape_trace()).c_str(), stdout);
    return 0;
  }
  require_input_file(args.config, "config");
  const RunConfig cfg = RunConfig::load(args.config);
  echo_config(cfg);
  Rng rng(cfg.train.seed);
  const Model model = build_model(cfg.model, rng);
  std::fputs(render_layer_table(model.shape_trace()).c_str(), stdout);
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  std::size_t healthy = 0, pathological = 0;
  std::uint64_t seed = 0;
  int rate = 8000;
};

int cmd_synth(const SynthArgs& args) {
  SynthSpec spec;
  spec.n_healthy = args.healthy;
  spec.n_pathological = args.pathological;
  spec.sample_rate_hz = args.rate;
  spec.seed = args.seed;
  log_info("config out=" + args.out_dir + " healthy=" + std::to_string(args.healthy) +
           " pathological=" + std::to_string(args.pathological) +
           " seed=" + std::to_string(args.seed) + " rate=" + std::to_string(args.rate));
  try {
    const Manifest manifest = generate_synthetic_corpus(spec, args.out_dir);
    std::printf("wrote %zu wav file(s) and manifest.csv to %s\n", manifest.size(),
                args.out_dir.c_str());
    return 0;
  } catch (const IoError& e) {
    log_at(LogLevel::error, e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voice pathology detection from raw audio: corpus tools, training, evaluation"};
  app.require_subcommand(1);

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "assign balanced train/val/test splits");
  split_cmd->add_option("--manifest", split_args.manifest, "input manifest CSV")->required();
  split_cmd->add_option("--train", split_args.train, "train fraction of the healthy class");
  split_cmd->add_option("--val", split_args.val, "val fraction of the healthy class");
  split_cmd->add_option("--seed", split_args.seed, "sampling seed");
  split_cmd->add_option("--out", split_args.out, "output manifest CSV")->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model on a split manifest");
  train_cmd->add_option("--manifest", train_args.manifest, "manifest with train/val splits")
      ->required();
  train_cmd->add_option("--config", train_args.config, "key=value run configuration");
  train_cmd->add_option("--out-model", train_args.out_model, "checkpoint output path")
      ->required();
  train_cmd->add_option("--log", train_args.log, "epoch log output path (JSON lines)");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a manifest subset");
  eval_cmd->add_option("--model", eval_args.model, "checkpoint path")->required();
  eval_cmd->add_option("--manifest", eval_args.manifest, "split manifest CSV")->required();
  eval_cmd->add_option("--subset", eval_args.subset, "train, val or test (default test)");
  eval_cmd->add_option("--report", eval_args.report_path, "write the JSON report here");
  eval_cmd->add_option("--config", eval_args.config, "run configuration (framing overrides)");

  InspectArgs inspect_args;
  auto* inspect_cmd = app.add_subcommand("inspect", "print the layer table and parameter count");
  inspect_cmd->add_option("--config", inspect_args.config, "key=value run configuration");
  inspect_cmd->add_option("--model", inspect_args.model, "checkpoint path");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic two-class corpus");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth_cmd->add_option("--healthy", synth_args.healthy, "number of healthy files");
  synth_cmd->add_option("--pathological", synth_args.pathological,
                        "number of pathological files");
  synth_cmd->add_option("--seed", synth_args.seed, "generation seed");
  synth_cmd->add_option("--rate", synth_args.rate, "sample rate in Hz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (split_cmd->parsed()) return cmd_split(split_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_args);
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
  } catch (const Error& e) {
    log_at(LogLevel::error, e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log_at(LogLevel::error, e.what());
    return 1;
  }
  return 2;
}
