#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "pathovox/dataset.hpp"
#include "pathovox/run_config.hpp"
#include "pathovox/trainer.hpp"

namespace pathovox {

/// Reads and segments every manifest entry in `subset` (all entries when
/// subset is empty). Relative manifest paths resolve against base_dir.
/// Failures are rethrown as IngestError naming the offending file.
std::vector<LabeledSegments> load_labeled_segments(const Manifest& manifest,
                                                   std::optional<Split> subset,
                                                   const FrameConfig& frame,
                                                   const std::filesystem::path& base_dir);

struct TrainSummary {
  TrainResult result;
  std::size_t train_files = 0;
  std::size_t val_files = 0;
};

/// End-to-end training: load manifest, segment the train/val subsets,
/// build the model from cfg and run the training regime, writing the
/// checkpoint, sidecar and epoch log. Validation problems (missing
/// subsets, frame/feature mismatch) raise InvalidConfig before any
/// output is written.
TrainSummary train_from_manifest(const std::filesystem::path& manifest_path, const RunConfig& cfg,
                                 const std::filesystem::path& checkpoint_path,
                                 const std::filesystem::path& log_path,
                                 const EpochObserver& observer = {});

struct EvalSummary {
  ClassificationReport report;
  double mean_loss = 0.0;
  std::size_t file_count = 0;
};

/// Loads a checkpoint and evaluates one manifest subset with it.
EvalSummary evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                                const std::filesystem::path& manifest_path, Split subset,
                                const FrameConfig& frame);

}  // namespace pathovox
