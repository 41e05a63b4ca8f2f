#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "exprfuse/core.hpp"
#include "exprfuse/focal_loss.hpp"
#include "exprfuse/folds.hpp"
#include "exprfuse/fusion.hpp"
#include "exprfuse/io.hpp"
#include "exprfuse/metrics.hpp"
#include "exprfuse/pipeline.hpp"
#include "exprfuse/synthetic.hpp"
#include "exprfuse/trainer.hpp"

namespace py = pybind11;
using namespace exprfuse;

PYBIND11_MODULE(_exprfuse, m) {
  m.doc() = "Multi-model multi-fold ensemble toolkit for 8-class expression "
            "recognition: focal-loss training, weighted probability fusion, "
            "fold splitting and macro-F1 evaluation.";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<ExpressionClass>(m, "ExpressionClass")
      .value("ANGER", ExpressionClass::kAnger)
      .value("DISGUST", ExpressionClass::kDisgust)
      .value("FEAR", ExpressionClass::kFear)
      .value("HAPPINESS", ExpressionClass::kHappiness)
      .value("SADNESS", ExpressionClass::kSadness)
      .value("SURPRISE", ExpressionClass::kSurprise)
      .value("NEUTRAL", ExpressionClass::kNeutral)
      .value("OTHER", ExpressionClass::kOther);

  m.def("class_names", [] {
    std::vector<std::string> names;
    for (const auto n : class_names()) {
      names.emplace_back(n);
    }
    return names;
  });
  m.def("class_from_index", &class_from_index, py::arg("index"));
  m.def("class_from_name", &class_from_name, py::arg("name"));

  m.def(
      "argmax_label",
      [](const ProbArray& p) { return argmax_label(ProbabilityVector{p}); },
      py::arg("probabilities"));
  m.def("softmax", &softmax, py::arg("logits"));

  py::class_<PredictionRow>(m, "PredictionRow")
      .def(py::init<std::string, std::string, ProbArray>(),
           py::arg("frame_id"), py::arg("video_id"), py::arg("probabilities"))
      .def_readwrite("frame_id", &PredictionRow::frame_id)
      .def_readwrite("video_id", &PredictionRow::video_id)
      .def_readwrite("probabilities", &PredictionRow::p);

  py::class_<PredictionMatrix>(m, "PredictionMatrix")
      .def(py::init<>())
      .def(py::init<std::string, std::vector<PredictionRow>>(),
           py::arg("source_id"), py::arg("frames"))
      .def_readwrite("source_id", &PredictionMatrix::source_id)
      .def_readwrite("frames", &PredictionMatrix::frames)
      .def("__len__",
           [](const PredictionMatrix& m_) { return m_.frames.size(); });
  m.def("validate_prediction_matrix", &validate_prediction_matrix,
        py::arg("matrix"));

  py::class_<LabeledSample>(m, "LabeledSample")
      .def(py::init<>())
      .def(py::init<std::string, std::string, std::vector<double>,
                    ExpressionClass>(),
           py::arg("frame_id"), py::arg("video_id"), py::arg("features"),
           py::arg("label"))
      .def_readwrite("frame_id", &LabeledSample::frame_id)
      .def_readwrite("video_id", &LabeledSample::video_id)
      .def_readwrite("features", &LabeledSample::features)
      .def_readwrite("label", &LabeledSample::label);

  py::class_<FocalLossParams>(m, "FocalLossParams")
      .def(py::init<>())
      .def_readwrite("alpha", &FocalLossParams::alpha)
      .def_readwrite("gamma", &FocalLossParams::gamma);
  m.def(
      "focal_loss",
      [](const ProbArray& p, ExpressionClass label,
         const FocalLossParams& params) {
        return focal_loss(ProbabilityVector{p}, label, params);
      },
      py::arg("probabilities"), py::arg("label"),
      py::arg("params") = FocalLossParams{});
  m.def(
      "focal_loss_batch",
      [](const std::vector<std::pair<ProbArray, ExpressionClass>>& batch,
         const FocalLossParams& params) {
        std::vector<std::pair<ProbabilityVector, ExpressionClass>> converted;
        converted.reserve(batch.size());
        for (const auto& [p, label] : batch) {
          converted.emplace_back(ProbabilityVector{p}, label);
        }
        return focal_loss_batch(converted, params);
      },
      py::arg("samples"), py::arg("params") = FocalLossParams{});
  m.def("focal_loss_grad", &focal_loss_grad, py::arg("logits"),
        py::arg("label"), py::arg("params") = FocalLossParams{});

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def(py::init<>())
      .def_readwrite("counts", &ConfusionMatrix::counts)
      .def("total", &ConfusionMatrix::total);
  py::class_<EvalReport>(m, "EvalReport")
      .def(py::init<>())
      .def_readwrite("per_class_f1", &EvalReport::per_class_f1)
      .def_readwrite("per_class_precision", &EvalReport::per_class_precision)
      .def_readwrite("per_class_recall", &EvalReport::per_class_recall)
      .def_readwrite("support", &EvalReport::support)
      .def_readwrite("macro_f1", &EvalReport::macro_f1);
  m.def(
      "confusion",
      [](const std::vector<ExpressionClass>& predictions,
         const std::vector<ExpressionClass>& labels) {
        return confusion(predictions, labels);
      },
      py::arg("predictions"), py::arg("labels"));
  m.def("f1_per_class", &f1_per_class, py::arg("confusion_matrix"));
  m.def("macro_f1", &macro_f1, py::arg("confusion_matrix"));
  m.def("evaluate", &evaluate, py::arg("confusion_matrix"));

  py::class_<FoldPlan>(m, "FoldPlan")
      .def(py::init<>())
      .def_readwrite("k", &FoldPlan::k)
      .def_readwrite("seed", &FoldPlan::seed)
      .def_readwrite("assignment", &FoldPlan::assignment);
  m.def(
      "split_five_fold",
      [](const std::vector<LabeledSample>& samples, int k,
         std::uint64_t seed) { return split_five_fold(samples, k, seed); },
      py::arg("samples"), py::arg("k") = 5, py::arg("seed") = 0);
  m.def(
      "fold_view",
      [](const std::vector<LabeledSample>& samples, const FoldPlan& plan,
         int test_fold) { return fold_view(samples, plan, test_fold); },
      py::arg("samples"), py::arg("plan"), py::arg("test_fold"));

  py::class_<FusionWeights>(m, "FusionWeights")
      .def(py::init<>())
      .def(py::init<std::vector<double>>(), py::arg("w"))
      .def_readwrite("w", &FusionWeights::w);
  py::class_<FusionPreset>(m, "FusionPreset")
      .def_readonly("method", &FusionPreset::method)
      .def_readonly("fold", &FusionPreset::fold)
      .def_readonly("weights", &FusionPreset::weights)
      .def_readonly("reported_f1", &FusionPreset::reported_f1)
      .def("name", &FusionPreset::name);
  m.def("fusion_presets", [] {
    return std::vector<FusionPreset>(fusion_presets().begin(),
                                     fusion_presets().end());
  });
  m.def(
      "find_preset",
      [](const std::string& name) { return find_preset(name); },
      py::arg("name"));

  py::class_<WeightGrid>(m, "WeightGrid")
      .def(py::init<>())
      .def_static("default_grid", &WeightGrid::default_grid)
      .def_readwrite("values", &WeightGrid::values)
      .def_readwrite("exhaustive", &WeightGrid::exhaustive);

  m.def(
      "fuse_within_fold",
      [](const std::vector<PredictionMatrix>& sources,
         const FusionWeights& weights) {
        return fuse_within_fold(sources, weights);
      },
      py::arg("sources"), py::arg("weights"));
  m.def(
      "fuse_across_folds",
      [](const std::vector<PredictionMatrix>& fold_outputs,
         const std::optional<FusionWeights>& weights) {
        return fuse_across_folds(fold_outputs, weights);
      },
      py::arg("fold_outputs"), py::arg("weights") = std::nullopt);

  py::class_<SearchResult>(m, "SearchResult")
      .def_readonly("weights", &SearchResult::weights)
      .def_readonly("report", &SearchResult::report);
  m.def(
      "search_weights",
      [](const std::vector<PredictionMatrix>& sources,
         const std::vector<LabeledSample>& labels, const WeightGrid& grid) {
        return search_weights(sources, labels, grid);
      },
      py::arg("sources"), py::arg("labels"), py::arg("grid"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("initial_lr", &TrainConfig::initial_lr)
      .def_readwrite("min_lr", &TrainConfig::min_lr)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
      .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
      .def_readwrite("adam_eps", &TrainConfig::adam_eps)
      .def_readwrite("loss", &TrainConfig::loss)
      .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed);
  py::class_<LinearSoftmaxModel>(m, "LinearSoftmaxModel")
      .def(py::init<>())
      .def_readwrite("dim", &LinearSoftmaxModel::dim)
      .def_readwrite("weights", &LinearSoftmaxModel::weights)
      .def_readwrite("bias", &LinearSoftmaxModel::bias);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("epoch_mean_loss", &TrainResult::epoch_mean_loss);
  m.def("cosine_lr", &cosine_lr, py::arg("t"), py::arg("total_epochs"),
        py::arg("eta_max"), py::arg("eta_min"));
  m.def(
      "train",
      [](const std::vector<LabeledSample>& samples, const TrainConfig& config) {
        return train(samples, config);
      },
      py::arg("samples"), py::arg("config") = TrainConfig{});
  m.def(
      "predict",
      [](const LinearSoftmaxModel& model,
         const std::vector<LabeledSample>& samples,
         const std::string& source_id) {
        return predict(model, samples, source_id);
      },
      py::arg("model"), py::arg("samples"),
      py::arg("source_id") = "linear-softmax");

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("videos", &SyntheticSpec::videos)
      .def_readwrite("min_frames_per_video", &SyntheticSpec::min_frames_per_video)
      .def_readwrite("max_frames_per_video", &SyntheticSpec::max_frames_per_video)
      .def_readwrite("class_priors", &SyntheticSpec::class_priors)
      .def_readwrite("feature_dim", &SyntheticSpec::feature_dim)
      .def_readwrite("class_separation", &SyntheticSpec::class_separation)
      .def_readwrite("class_scales", &SyntheticSpec::class_scales)
      .def_readwrite("label_noise", &SyntheticSpec::label_noise)
      .def_readwrite("simulated_sources", &SyntheticSpec::simulated_sources)
      .def_readwrite("source_flip_rates", &SyntheticSpec::source_flip_rates)
      .def_readwrite("source_softness", &SyntheticSpec::source_softness)
      .def_readwrite("seed", &SyntheticSpec::seed);
  py::class_<SyntheticData>(m, "SyntheticData")
      .def_readonly("samples", &SyntheticData::samples)
      .def_readonly("sources", &SyntheticData::sources);
  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));

  m.def("read_predictions", &read_predictions, py::arg("path"));
  m.def("write_predictions", &write_predictions, py::arg("matrix"),
        py::arg("path"));
  m.def(
      "read_dataset",
      [](const std::filesystem::path& path) { return read_dataset(path); },
      py::arg("path"));
  m.def(
      "write_dataset",
      [](const std::vector<LabeledSample>& samples,
         const std::filesystem::path& path) { write_dataset(samples, path); },
      py::arg("samples"), py::arg("path"));
  m.def("read_fold_plan", &read_fold_plan, py::arg("path"));
  m.def("write_fold_plan", &write_fold_plan, py::arg("plan"), py::arg("path"));
  m.def("write_submission", &write_submission, py::arg("matrix"),
        py::arg("path"));
  m.def("read_model", &read_model, py::arg("path"));
  m.def("write_model", &write_model, py::arg("model"), py::arg("path"));
  m.def("write_report", &write_report, py::arg("report"), py::arg("path"));
  m.def("format_report", &format_report, py::arg("report"));

  py::class_<TrainedFamily>(m, "TrainedFamily")
      .def(py::init<>())
      .def_readwrite("name", &TrainedFamily::name)
      .def_readwrite("gamma", &TrainedFamily::gamma);
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("dataset_path", &RunConfig::dataset_path)
      .def_readwrite("prediction_paths", &RunConfig::prediction_paths)
      .def_readwrite("fold_plan_path", &RunConfig::fold_plan_path)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("k", &RunConfig::k)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("use_synthetic", &RunConfig::use_synthetic)
      .def_readwrite("synthetic", &RunConfig::synthetic)
      .def_readwrite("train", &RunConfig::train)
      .def_readwrite("families", &RunConfig::families)
      .def_readwrite("grid", &RunConfig::grid)
      .def_readwrite("preset", &RunConfig::preset);
  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("final_report", &PipelineResult::final_report)
      .def_readonly("fold_weights", &PipelineResult::fold_weights)
      .def_readonly("fold_reports", &PipelineResult::fold_reports)
      .def_readonly("submission_path", &PipelineResult::submission_path);
  m.def("run_pipeline", &run_pipeline, py::arg("config"));
  m.def("read_run_config", &read_run_config, py::arg("path"));
  m.def("write_run_config", &write_run_config, py::arg("config"),
        py::arg("path"));
}
