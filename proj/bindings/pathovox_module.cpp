#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pathovox/checkpoint.hpp"
#include "pathovox/pipeline.hpp"

namespace py = pybind11;
using namespace pathovox;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const SegmentMatrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

SegmentMatrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeMismatch("segments must be a 2-D array");
  SegmentMatrix m;
  m.rows = static_cast<std::size_t>(a.shape(0));
  m.cols = static_cast<std::size_t>(a.shape(1));
  m.values.assign(a.data(), a.data() + m.rows * m.cols);
  return m;
}

WindowKind parse_window(const std::string& name) {
  if (name == "hamming") return WindowKind::hamming;
  if (name == "rectangular") return WindowKind::rectangular;
  throw InvalidConfig("unknown window kind: " + name);
}

py::dict class_metrics_dict(const ClassMetrics& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["degenerate"] = m.degenerate;
  return d;
}

py::dict report_dict(const ClassificationReport& rep) {
  py::dict d;
  d["accuracy"] = rep.accuracy;
  d["sensitivity"] = rep.sensitivity;
  d["specificity"] = rep.specificity;
  py::dict classes;
  classes["pathological"] = class_metrics_dict(rep.pathological);
  classes["healthy"] = class_metrics_dict(rep.healthy);
  d["classes"] = classes;
  d["matrix"] = py::make_tuple(
      py::make_tuple(rep.matrix.counts[0][0], rep.matrix.counts[0][1]),
      py::make_tuple(rep.matrix.counts[1][0], rep.matrix.counts[1][1]));
  d["total"] = rep.matrix.total();
  return d;
}

RunConfig resolve_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
}

}  // namespace

PYBIND11_MODULE(_pathovox, m) {
  m.doc() = "voice pathology detection: audio framing, CNN+LSTM training and evaluation";

  py::register_exception<Error>(m, "PathovoxError", PyExc_RuntimeError);

  m.def("hamming_window", [](std::size_t n) { return to_array(hamming_window(n)); }, py::arg("n"));

  m.def(
      "read_wav",
      [](const std::filesystem::path& path) {
        const Signal s = read_wav(path);
        return py::make_tuple(to_array(s.samples), s.sample_rate_hz);
      },
      py::arg("path"), "Returns (samples, sample_rate_hz); samples normalized to [-1, 1).");

  m.def(
      "write_wav",
      [](const std::filesystem::path& path,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
         int rate) {
        write_wav(path, std::span<const double>(samples.data(),
                                                static_cast<std::size_t>(samples.size())),
                  rate);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate_hz"));

  m.def(
      "segment",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, int rate,
         double frame_ms, double overlap_ms, const std::string& window) {
        Signal s;
        s.samples.assign(samples.data(), samples.data() + samples.size());
        s.sample_rate_hz = rate;
        s.source_path = "<array>";
        FrameConfig cfg;
        cfg.frame_ms = frame_ms;
        cfg.overlap_ms = overlap_ms;
        cfg.window = parse_window(window);
        return to_array(segment(s, cfg));
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("frame_ms") = 64.0,
      py::arg("overlap_ms") = 30.0, py::arg("window") = "hamming",
      "Windowed frame matrix of shape (segments, frame_len).");

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("frame_features", &ModelConfig::frame_features)
      .def_readwrite("conv1_filters", &ModelConfig::conv1_filters)
      .def_readwrite("conv1_kernel", &ModelConfig::conv1_kernel)
      .def_readwrite("pool1", &ModelConfig::pool1)
      .def_readwrite("conv2_filters", &ModelConfig::conv2_filters)
      .def_readwrite("conv2_kernel", &ModelConfig::conv2_kernel)
      .def_readwrite("pool2", &ModelConfig::pool2)
      .def_readwrite("lstm_units", &ModelConfig::lstm_units)
      .def_readwrite("lstm_input_dropout", &ModelConfig::lstm_input_dropout)
      .def_readwrite("lstm_recurrent_dropout", &ModelConfig::lstm_recurrent_dropout)
      .def_readwrite("dense_units", &ModelConfig::dense_units)
      .def_readwrite("output_classes", &ModelConfig::output_classes);

  py::class_<Model>(m, "Model")
      .def("trainable_count", &Model::trainable_count)
      .def("shape_trace",
           [](const Model& model) {
             py::list out;
             for (const TraceEntry& e : model.shape_trace())
               out.append(py::make_tuple(e.name, py::tuple(py::cast(e.shape)), e.param_count));
             return out;
           })
      .def("layer_table", [](const Model& model) { return render_layer_table(model.shape_trace()); })
      .def(
          "predict",
          [](Model& model,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& segments) {
            const Prediction p = model.predict_file(matrix_from_array(segments));
            return py::make_tuple(to_string(p.label),
                                  py::make_tuple(p.probabilities[0], p.probabilities[1]));
          },
          py::arg("segments"), "Returns (label, (p_pathological, p_healthy)).")
      .def("save", [](const Model& model, const std::filesystem::path& path) {
        save_checkpoint(model, path);
      });

  m.def(
      "build_model",
      [](const ModelConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        return build_model(cfg, rng);
      },
      py::arg("config"), py::arg("seed") = 0);

  m.def("load_model", [](const std::filesystem::path& path) { return load_checkpoint(path); },
        py::arg("path"));

  m.def(
      "report_from_matrix",
      [](const std::array<std::array<std::uint64_t, 2>, 2>& counts) {
        ConfusionMatrix matrix;
        matrix.counts = counts;
        return report_dict(report(matrix));
      },
      py::arg("matrix"),
      "Classification report from 2x2 counts (rows = true class, 0 = pathological).");

  m.def(
      "make_split",
      [](const std::vector<std::pair<std::string, std::string>>& entries, double train_fraction,
         double val_fraction, std::uint64_t seed) {
        Manifest manifest;
        for (const auto& [path, label] : entries)
          manifest.push_back({path, parse_label(label), std::nullopt});
        SplitSpec spec;
        spec.train_fraction = train_fraction;
        spec.val_fraction = val_fraction;
        spec.seed = seed;
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const ManifestEntry& e : make_split(manifest, spec))
          out.emplace_back(e.file_path, to_string(e.label),
                           e.split ? to_string(*e.split) : "");
        return out;
      },
      py::arg("entries"), py::arg("train_fraction") = 0.70, py::arg("val_fraction") = 0.15,
      py::arg("seed") = 0,
      "Balanced split over (path, label) pairs; returns (path, label, split) tuples.");

  m.def(
      "generate_synthetic_corpus",
      [](const std::filesystem::path& out_dir, std::size_t n_healthy, std::size_t n_pathological,
         std::uint64_t seed, int sample_rate_hz, double min_duration_s, double max_duration_s) {
        SynthSpec spec;
        spec.n_healthy = n_healthy;
        spec.n_pathological = n_pathological;
        spec.seed = seed;
        spec.sample_rate_hz = sample_rate_hz;
        spec.min_duration_s = min_duration_s;
        spec.max_duration_s = max_duration_s;
        std::vector<std::pair<std::string, std::string>> out;
        for (const ManifestEntry& e : generate_synthetic_corpus(spec, out_dir))
          out.emplace_back(e.file_path, to_string(e.label));
        return out;
      },
      py::arg("out_dir"), py::arg("n_healthy"), py::arg("n_pathological"), py::arg("seed") = 0,
      py::arg("sample_rate_hz") = 8000, py::arg("min_duration_s") = 0.5,
      py::arg("max_duration_s") = 1.0);

  m.def(
      "split_manifest",
      [](const std::filesystem::path& manifest_in, const std::filesystem::path& manifest_out,
         double train_fraction, double val_fraction, std::uint64_t seed) {
        SplitSpec spec;
        spec.train_fraction = train_fraction;
        spec.val_fraction = val_fraction;
        spec.seed = seed;
        const Manifest annotated = make_split(load_manifest(manifest_in), spec);
        save_manifest(annotated, manifest_out);
        const SplitCounts c = count_by_split(annotated);
        py::dict d;
        d["train"] = py::make_tuple(c.train_healthy, c.train_pathological);
        d["val"] = py::make_tuple(c.val_healthy, c.val_pathological);
        d["test"] = py::make_tuple(c.test_healthy, c.test_pathological);
        return d;
      },
      py::arg("manifest_in"), py::arg("manifest_out"), py::arg("train_fraction") = 0.70,
      py::arg("val_fraction") = 0.15, py::arg("seed") = 0);

  m.def(
      "train_from_manifest",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out_model,
         const std::filesystem::path& log_path, const std::string& config_path) {
        TrainSummary summary;
        {
          py::gil_scoped_release release;
          summary = train_from_manifest(manifest, resolve_config(config_path), out_model,
                                        log_path);
        }
        py::dict d;
        d["best_epoch"] = summary.result.best_epoch;
        d["best_val_loss"] = summary.result.best_val_loss;
        d["total_steps"] = summary.result.total_steps;
        d["epochs"] = summary.result.logs.size();
        d["train_files"] = summary.train_files;
        d["val_files"] = summary.val_files;
        return d;
      },
      py::arg("manifest"), py::arg("out_model"), py::arg("log_path") = std::filesystem::path(),
      py::arg("config_path") = std::string());

  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& model, const std::filesystem::path& manifest,
         const std::string& subset) {
        const EvalSummary summary =
            evaluate_checkpoint(model, manifest, parse_split(subset), FrameConfig{});
        py::dict d = report_dict(summary.report);
        d["mean_loss"] = summary.mean_loss;
        d["files"] = summary.file_count;
        return d;
      },
      py::arg("model"), py::arg("manifest"), py::arg("subset") = "test");
}
