#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "pathovox/audio.hpp"
#include "pathovox/evaluation.hpp"
#include "pathovox/model.hpp"
#include "pathovox/optim.hpp"

namespace pathovox {

struct TrainConfig {
  int max_epochs = 34;
  std::uint64_t seed = 0;
  double initial_lr = 6e-5;
  int lr_patience = 8;
  double lr_factor = 0.5;
  double min_lr = 1e-7;
  int stop_patience = 20;
  std::filesystem::path checkpoint_path;  // empty = keep in memory only
  std::filesystem::path log_path;         // empty = no epoch log file

  void validate() const;  // throws InvalidConfig
  bool operator==(const TrainConfig&) const = default;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;  // rate used during this epoch
  double wall_seconds = 0.0;
};

/// A file already segmented for the network, with its true class.
struct LabeledSegments {
  SegmentMatrix segments;
  Label label = Label::healthy;
  std::string source;
};

struct TrainResult {
  int best_epoch = 0;           // 1-based epoch with the lowest validation loss
  double best_val_loss = 0.0;
  long long total_steps = 0;    // one Adam step per training file per epoch
  std::vector<EpochLog> logs;
};

/// Optional per-epoch hook; returning false stops training after the
/// current epoch (the best checkpoint so far is still restored).
using EpochObserver = std::function<bool(const EpochLog&)>;

/// Runs the training regime: every epoch reshuffles the file order with
/// the seeded rng, takes one forward/backward/Adam step per file (batch
/// size 1, dropout active), then evaluates the validation set with
/// dropout off. The plateau schedule watches validation accuracy, early
/// stopping watches validation loss, and the parameters from the best
/// validation-loss epoch are restored into the model and written to
/// checkpoint_path (with a sidecar JSON) when that path is set. Epoch
/// logs stream to log_path as one JSON object per line.
TrainResult train(Model& model, const std::vector<LabeledSegments>& train_files,
                  const std::vector<LabeledSegments>& val_files, const TrainConfig& cfg,
                  Rng& rng, const EpochObserver& observer = {});

struct SplitEval {
  double mean_loss = 0.0;
  ConfusionMatrix matrix;
  double accuracy() const;
};

/// Inference over a file list in order; per-file cross-entropy averaged,
/// predictions folded into a confusion matrix.
SplitEval evaluate_split(Model& model, std::span<const LabeledSegments> files);

}  // namespace pathovox
