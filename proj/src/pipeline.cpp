#include "pathovox/pipeline.hpp"

#include "pathovox/checkpoint.hpp"

namespace pathovox {

std::vector<LabeledSegments> load_labeled_segments(const Manifest& manifest,
                                                   std::optional<Split> subset,
                                                   const FrameConfig& frame,
                                                   const std::filesystem::path& base_dir) {
  std::vector<LabeledSegments> out;
  for (const ManifestEntry& entry : manifest) {
    if (subset && entry.split != subset) continue;
    std::filesystem::path path(entry.file_path);
    if (path.is_relative()) path = base_dir / path;
    try {
      const Signal signal = read_wav(path);
      out.push_back({segment(signal, frame), entry.label, path.string()});
    } catch (const Error& e) {
      throw IngestError("while loading " + path.string() + ": " + e.what());
    }
  }
  return out;
}

TrainSummary train_from_manifest(const std::filesystem::path& manifest_path, const RunConfig& cfg,
                                 const std::filesystem::path& checkpoint_path,
                                 const std::filesystem::path& log_path,
                                 const EpochObserver& observer) {
  cfg.validate();
  const Manifest manifest = load_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();

  const auto train_files = load_labeled_segments(manifest, Split::train, cfg.frame, base);
  const auto val_files = load_labeled_segments(manifest, Split::val, cfg.frame, base);
  if (train_files.empty()) throw InvalidConfig("manifest has no rows with split=train");
  if (val_files.empty()) throw InvalidConfig("manifest has no rows with split=val");
  for (const auto* files : {&train_files, &val_files})
    for (const LabeledSegments& f : *files)
      if (f.segments.cols != cfg.model.frame_features)
        throw InvalidConfig(f.source + ": frames carry " + std::to_string(f.segments.cols) +
                            " samples but frame_features=" +
                            std::to_string(cfg.model.frame_features) +
                            "; align frame_ms and the sample rate with the model");

  Rng rng(cfg.train.seed);
  Model model = build_model(cfg.model, rng);

  TrainConfig train_cfg = cfg.train;
  train_cfg.checkpoint_path = checkpoint_path;
  train_cfg.log_path = log_path;

  TrainSummary summary;
  summary.train_files = train_files.size();
  summary.val_files = val_files.size();
  summary.result = train(model, train_files, val_files, train_cfg, rng, observer);
  return summary;
}

EvalSummary evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                                const std::filesystem::path& manifest_path, Split subset,
                                const FrameConfig& frame) {
  Model model = load_checkpoint(checkpoint_path);
  const Manifest manifest = load_manifest(manifest_path);
  const auto files =
      load_labeled_segments(manifest, subset, frame, manifest_path.parent_path());
  if (files.empty())
    throw InvalidConfig("manifest has no rows with split=" + to_string(subset));

  SplitEval eval = evaluate_split(model, files);
  EvalSummary summary;
  summary.report = report(eval.matrix);
  summary.mean_loss = eval.mean_loss;
  summary.file_count = files.size();
  return summary;
}

}  // namespace pathovox
