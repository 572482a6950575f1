#include "pathovox/trainer.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "pathovox/checkpoint.hpp"

namespace pathovox {

namespace {

using nlohmann::json;

std::array<double, 2> one_hot(Label label) {
  return label == Label::pathological ? std::array<double, 2>{1.0, 0.0}
                                      : std::array<double, 2>{0.0, 1.0};
}

json to_json(const EpochLog& log) {
  return json{{"epoch", log.epoch},
              {"train_loss", log.train_loss},
              {"train_accuracy", log.train_accuracy},
              {"val_loss", log.val_loss},
              {"val_accuracy", log.val_accuracy},
              {"learning_rate", log.learning_rate},
              {"wall_seconds", log.wall_seconds}};
}

json to_json(const TrainConfig& cfg) {
  return json{{"max_epochs", cfg.max_epochs},
              {"seed", cfg.seed},
              {"initial_lr", cfg.initial_lr},
              {"lr_patience", cfg.lr_patience},
              {"lr_factor", cfg.lr_factor},
              {"min_lr", cfg.min_lr},
              {"stop_patience", cfg.stop_patience},
              {"checkpoint_path", cfg.checkpoint_path.string()},
              {"log_path", cfg.log_path.string()}};
}

void write_checkpoint_atomically(const Model& model, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  save_checkpoint(model, tmp);
  std::filesystem::rename(tmp, path);
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs < 1) throw InvalidConfig("max_epochs must be at least 1");
  if (!(initial_lr > 0.0) || !(min_lr > 0.0) || !(lr_factor > 0.0) || lr_factor >= 1.0)
    throw InvalidConfig("learning-rate schedule values must be positive (factor below 1)");
  if (initial_lr < min_lr) throw InvalidConfig("initial_lr must be at least min_lr");
  if (lr_patience < 1 || stop_patience < 1) throw InvalidConfig("patience values must be >= 1");
}

double SplitEval::accuracy() const {
  const std::uint64_t total = matrix.total();
  if (total == 0) return 0.0;
  return static_cast<double>(matrix.counts[0][0] + matrix.counts[1][1]) /
         static_cast<double>(total);
}

SplitEval evaluate_split(Model& model, std::span<const LabeledSegments> files) {
  if (files.empty()) throw InvalidConfig("evaluate_split needs at least one file");
  Rng unused(0);
  SplitEval eval;
  double loss_sum = 0.0;
  for (const LabeledSegments& file : files) {
    try {
      const std::vector<double> p = model.forward(file.segments, /*training=*/false, unused);
      const auto target = one_hot(file.label);
      loss_sum += cross_entropy(p, target);
      const Label predicted = p[0] >= p[1] ? Label::pathological : Label::healthy;
      eval.matrix.add(file.label, predicted);
    } catch (const Error& e) {
      throw IngestError("while evaluating " + file.source + ": " + e.what());
    }
  }
  eval.mean_loss = loss_sum / static_cast<double>(files.size());
  return eval;
}

TrainResult train(Model& model, const std::vector<LabeledSegments>& train_files,
                  const std::vector<LabeledSegments>& val_files, const TrainConfig& cfg,
                  Rng& rng, const EpochObserver& observer) {
  cfg.validate();
  if (train_files.empty()) throw InvalidConfig("training set is empty");
  if (val_files.empty()) throw InvalidConfig("validation set is empty");
  for (const LabeledSegments& f : train_files)
    if (f.segments.cols != model.config().frame_features)
      throw ShapeMismatch(f.source + ": segment width does not match the model");

  std::ofstream log_stream;
  if (!cfg.log_path.empty()) {
    log_stream.open(cfg.log_path, std::ios::trunc);
    if (!log_stream) throw IoError("cannot create epoch log " + cfg.log_path.string());
  }

  AdamState adam = AdamState::for_parameters(model.parameters(), cfg.initial_lr);
  ScheduleState schedule;
  schedule.lr_patience = cfg.lr_patience;
  schedule.lr_factor = cfg.lr_factor;
  schedule.min_lr = cfg.min_lr;
  schedule.stop_patience = cfg.stop_patience;

  TrainResult result;
  std::vector<Tensor> best_params;
  std::vector<std::size_t> order(train_files.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double train_loss_sum = 0.0;
    std::size_t train_correct = 0;
    for (const std::size_t idx : order) {
      const LabeledSegments& file = train_files[idx];
      try {
        const std::vector<double> p = model.forward(file.segments, /*training=*/true, rng);
        const auto target = one_hot(file.label);
        train_loss_sum += cross_entropy(p, target);
        const Label predicted = p[0] >= p[1] ? Label::pathological : Label::healthy;
        if (predicted == file.label) ++train_correct;
        model.backward(softmax_cross_entropy_grad(p, target));
        adam_step(model.parameters(), model.gradients(), adam);
        result.total_steps += 1;
      } catch (const Error& e) {
        throw IngestError("while training on " + file.source + ": " + e.what());
      }
    }

    const SplitEval val = evaluate_split(model, val_files);
    const auto epoch_end = std::chrono::steady_clock::now();

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss_sum / static_cast<double>(train_files.size());
    log.train_accuracy =
        static_cast<double>(train_correct) / static_cast<double>(train_files.size());
    log.val_loss = val.mean_loss;
    log.val_accuracy = val.accuracy();
    log.learning_rate = adam.learning_rate;
    log.wall_seconds = std::chrono::duration<double>(epoch_end - epoch_start).count();
    result.logs.push_back(log);
    if (log_stream) {
      log_stream << to_json(log).dump() << '\n';
      log_stream.flush();
    }

    const bool improved = val.mean_loss < schedule.best_val_loss;
    if (improved) {
      result.best_epoch = epoch;
      result.best_val_loss = val.mean_loss;
      best_params.clear();
      for (const Tensor* t : std::as_const(model).parameters()) best_params.push_back(*t);
      if (!cfg.checkpoint_path.empty()) write_checkpoint_atomically(model, cfg.checkpoint_path);
    }

    adam.learning_rate = plateau_update(schedule, log.val_accuracy, adam.learning_rate);
    const bool stop = early_stop_update(schedule, val.mean_loss);
    const bool keep_going = observer ? observer(log) : true;
    if (stop || !keep_going) break;
  }

  // restore the best-validation-loss parameters
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];

  if (!cfg.checkpoint_path.empty()) {
    const json sidecar = {{"best_epoch", result.best_epoch},
                          {"best_val_loss", result.best_val_loss},
                          {"train_config", to_json(cfg)}};
    const std::filesystem::path sidecar_path = cfg.checkpoint_path.string() + ".json";
    std::ofstream out(sidecar_path);
    if (!out) throw IoError("cannot create sidecar " + sidecar_path.string());
    out << sidecar.dump(2) << '\n';
  }
  return result;
}

}  // namespace pathovox
