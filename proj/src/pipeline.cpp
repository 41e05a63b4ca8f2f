#include "exprfuse/pipeline.hpp"

#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "exprfuse/folds.hpp"
#include "exprfuse/io.hpp"

namespace exprfuse {

namespace {

using nlohmann::json;

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("stage " + stage + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError("stage " + stage + ": " + e.what());
  }
}

template <typename T, size_t N>
std::array<T, N> to_array(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != N) {
    throw ValidationError("config: \"" + key + "\" must be an array of " +
                          std::to_string(N));
  }
  std::array<T, N> out{};
  for (size_t i = 0; i < N; ++i) {
    out[i] = j[i].get<T>();
  }
  return out;
}

json synthetic_to_json(const SyntheticSpec& s) {
  return json{{"videos", s.videos},
              {"min_frames_per_video", s.min_frames_per_video},
              {"max_frames_per_video", s.max_frames_per_video},
              {"class_priors", s.class_priors},
              {"feature_dim", s.feature_dim},
              {"class_separation", s.class_separation},
              {"class_scales", s.class_scales},
              {"label_noise", s.label_noise},
              {"simulated_sources", s.simulated_sources},
              {"source_flip_rates", s.source_flip_rates},
              {"source_softness", s.source_softness},
              {"seed", s.seed}};
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s;
  s.videos = j.value("videos", s.videos);
  s.min_frames_per_video =
      j.value("min_frames_per_video", s.min_frames_per_video);
  s.max_frames_per_video =
      j.value("max_frames_per_video", s.max_frames_per_video);
  if (j.contains("class_priors")) {
    s.class_priors = to_array<double, kNumClasses>(j["class_priors"], "class_priors");
  }
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.class_separation = j.value("class_separation", s.class_separation);
  if (j.contains("class_scales")) {
    s.class_scales = to_array<double, kNumClasses>(j["class_scales"], "class_scales");
  }
  s.label_noise = j.value("label_noise", s.label_noise);
  s.simulated_sources = j.value("simulated_sources", s.simulated_sources);
  if (j.contains("source_flip_rates")) {
    s.source_flip_rates = j["source_flip_rates"].get<std::vector<double>>();
  }
  s.source_softness = j.value("source_softness", s.source_softness);
  s.seed = j.value("seed", s.seed);
  return s;
}

json train_to_json(const TrainConfig& t) {
  return json{{"initial_lr", t.initial_lr},
              {"min_lr", t.min_lr},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"adam_beta1", t.adam_beta1},
              {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},
              {"alpha", t.loss.alpha},
              {"gamma", t.loss.gamma},
              {"shuffle_seed", t.shuffle_seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.initial_lr = j.value("initial_lr", t.initial_lr);
  t.min_lr = j.value("min_lr", t.min_lr);
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.adam_beta1 = j.value("adam_beta1", t.adam_beta1);
  t.adam_beta2 = j.value("adam_beta2", t.adam_beta2);
  t.adam_eps = j.value("adam_eps", t.adam_eps);
  if (j.contains("alpha")) {
    t.loss.alpha = to_array<double, kNumClasses>(j["alpha"], "alpha");
  }
  if (j.contains("gamma")) {
    t.loss.gamma = to_array<double, kNumClasses>(j["gamma"], "gamma");
  }
  t.shuffle_seed = j.value("shuffle_seed", t.shuffle_seed);
  return t;
}

PredictionMatrix restrict_to_frames(
    const PredictionMatrix& matrix,
    const std::unordered_set<std::string_view>& keep) {
  PredictionMatrix out;
  out.source_id = matrix.source_id;
  for (const auto& row : matrix.frames) {
    if (keep.count(row.frame_id)) {
      out.frames.push_back(row);
    }
  }
  return out;
}

FusionWeights preset_weights_for_fold(const RunConfig& config, int fold,
                                      size_t num_sources) {
  const FusionPreset* preset = nullptr;
  for (const auto& p : fusion_presets()) {
    if (p.name() == config.preset) {
      preset = &p;
      break;
    }
  }
  if (preset == nullptr) {
    // Method name: pick the entry for this fold (folds are 1-based in the
    // catalog).
    preset = &find_preset(config.preset + " / Fold " + std::to_string(fold + 1));
  }
  validate_fusion_weights(preset->weights, num_sources);
  return preset->weights;
}

}  // namespace

void validate_run_config(const RunConfig& config) {
  if (config.k < 2) {
    throw ValidationError("config: k must be >= 2");
  }
  if (config.output_dir.empty()) {
    throw ValidationError("config: output_dir must be set");
  }
  if (!config.use_synthetic && config.dataset_path.empty()) {
    throw ValidationError("config: either set use_synthetic or a dataset path");
  }
  std::set<std::string> paths;
  auto check_distinct = [&paths](const std::string& p) {
    if (p.empty()) return;
    if (!paths.insert(p).second) {
      throw ValidationError("config: path \"" + p + "\" referenced twice");
    }
  };
  check_distinct(config.dataset_path);
  for (const auto& p : config.prediction_paths) {
    check_distinct(p);
  }
  check_distinct(config.fold_plan_path);
  check_distinct(config.output_dir);
  validate_weight_grid(config.grid);
  validate_train_config(config.train);
  if (config.use_synthetic) {
    validate_synthetic_spec(config.synthetic);
  }
  if (!config.preset.empty()) {
    // Fails fast on unknown names; fold-specific lookup happens later.
    bool known = false;
    for (const auto& p : fusion_presets()) {
      if (p.name() == config.preset || p.method == config.preset) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError("config: unknown preset \"" + config.preset + "\"");
    }
  }
}

RunConfig parse_run_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  c.dataset_path = j.value("dataset", c.dataset_path);
  if (j.contains("predictions")) {
    c.prediction_paths = j["predictions"].get<std::vector<std::string>>();
  }
  c.fold_plan_path = j.value("fold_plan", c.fold_plan_path);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.k = j.value("k", c.k);
  c.seed = j.value("seed", c.seed);
  c.use_synthetic = j.value("use_synthetic", c.use_synthetic);
  if (j.contains("synthetic")) {
    c.synthetic = synthetic_from_json(j["synthetic"]);
  }
  if (j.contains("train")) {
    c.train = train_from_json(j["train"]);
  }
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : j["families"]) {
      TrainedFamily family;
      family.name = f.value("name", family.name);
      family.gamma = f.value("gamma", family.gamma);
      c.families.push_back(family);
    }
  }
  if (j.contains("grid")) {
    if (j["grid"].contains("values")) {
      c.grid.values = j["grid"]["values"].get<std::vector<double>>();
    }
    c.grid.exhaustive = j["grid"].value("exhaustive", c.grid.exhaustive);
  }
  c.preset = j.value("preset", c.preset);
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json families = json::array();
  for (const auto& f : c.families) {
    families.push_back(json{{"name", f.name}, {"gamma", f.gamma}});
  }
  const json j{{"dataset", c.dataset_path},
               {"predictions", c.prediction_paths},
               {"fold_plan", c.fold_plan_path},
               {"output_dir", c.output_dir},
               {"k", c.k},
               {"seed", c.seed},
               {"use_synthetic", c.use_synthetic},
               {"synthetic", synthetic_to_json(c.synthetic)},
               {"train", train_to_json(c.train)},
               {"families", families},
               {"grid", json{{"values", c.grid.values},
                             {"exhaustive", c.grid.exhaustive}}},
               {"preset", c.preset}};
  return j.dump(2) + "\n";
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config \"" + path.string() + "\"");
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config_json(text);
}

void write_run_config(const RunConfig& config,
                      const std::filesystem::path& path) {
  detail::write_text_atomic(path, run_config_to_json(config));
}

PipelineResult run_pipeline(const RunConfig& config) {
  validate_run_config(config);
  const std::filesystem::path out_dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory \"" + out_dir.string() +
                  "\": " + ec.message());
  }

  // Load or generate the dataset and the simulated sources.
  std::vector<LabeledSample> samples;
  std::vector<PredictionMatrix> sources;
  run_stage("load", [&] {
    if (config.use_synthetic) {
      SyntheticData data = generate_synthetic(config.synthetic);
      samples = std::move(data.samples);
      sources = std::move(data.sources);
      write_dataset(samples, out_dir / "dataset.csv");
      for (const auto& src : sources) {
        write_predictions(src, out_dir / (src.source_id + ".csv"));
      }
    } else {
      samples = read_dataset(config.dataset_path);
      for (const auto& path : config.prediction_paths) {
        sources.push_back(read_predictions(path));
      }
    }
    if (samples.empty()) {
      throw ValidationError("dataset is empty");
    }
    if (sources.empty() && config.families.empty()) {
      throw ValidationError("no prediction sources configured");
    }
  });

  FoldPlan plan;
  run_stage("split", [&] {
    if (!config.fold_plan_path.empty()) {
      plan = read_fold_plan(config.fold_plan_path);
    } else {
      plan = split_five_fold(samples, config.k, config.seed);
    }
    write_fold_plan(plan, out_dir / "fold_plan.csv");
  });

  PipelineResult result;
  std::vector<PredictionMatrix> fold_outputs;
  for (int f = 0; f < plan.k; ++f) {
    const std::string stage = "fold " + std::to_string(f);
    run_stage(stage, [&] {
      const auto [train_set, test_set] = fold_view(samples, plan, f);

      // Per-family model on this fold's training split, predicting the
      // common evaluation frame set (all frames).
      std::vector<PredictionMatrix> fold_sources = sources;
      for (size_t i = 0; i < config.families.size(); ++i) {
        const auto& family = config.families[i];
        TrainConfig tc = config.train;
        tc.shuffle_seed += i;
        if (family.gamma >= 0.0) {
          tc.loss.gamma.fill(family.gamma);
        }
        const TrainResult trained = train(train_set, tc);
        write_model(trained.model, out_dir / ("model_fold" + std::to_string(f) +
                                              "_" + family.name + ".txt"));
        fold_sources.push_back(predict(trained.model, samples, family.name));
      }

      std::unordered_set<std::string_view> test_ids;
      test_ids.reserve(test_set.size());
      for (const auto& s : test_set) {
        test_ids.insert(s.frame_id);
      }
      std::vector<PredictionMatrix> held_out;
      held_out.reserve(fold_sources.size());
      for (const auto& src : fold_sources) {
        held_out.push_back(restrict_to_frames(src, test_ids));
      }

      FusionWeights weights;
      EvalReport fold_report;
      if (!config.preset.empty()) {
        weights = preset_weights_for_fold(config, f, fold_sources.size());
        const PredictionMatrix fused_test = fuse_within_fold(held_out, weights);
        std::vector<ExpressionClass> preds;
        std::vector<ExpressionClass> labels;
        preds.reserve(test_set.size());
        labels.reserve(test_set.size());
        std::unordered_map<std::string_view, ExpressionClass> label_by_id;
        for (const auto& s : test_set) {
          label_by_id.emplace(s.frame_id, s.label);
        }
        for (const auto& row : fused_test.frames) {
          preds.push_back(static_cast<ExpressionClass>(argmax_index(row.p)));
          labels.push_back(label_by_id.at(row.frame_id));
        }
        fold_report = evaluate(confusion(preds, labels));
      } else {
        const SearchResult search = search_weights(held_out, test_set, config.grid);
        weights = search.weights;
        fold_report = search.report;
      }

      // Persist the per-fold weight record and held-out report.
      std::string weight_text = "source_id,weight\n";
      for (size_t m = 0; m < fold_sources.size(); ++m) {
        weight_text += fold_sources[m].source_id + ',' +
                       detail::format_double(weights.w[m]) + '\n';
      }
      detail::write_text_atomic(
          out_dir / ("fold" + std::to_string(f) + "_weights.csv"), weight_text);
      write_report(fold_report,
                   out_dir / ("fold" + std::to_string(f) + "_report.csv"));

      fold_outputs.push_back(fuse_within_fold(fold_sources, weights));
      result.fold_weights.push_back(std::move(weights));
      result.fold_reports.push_back(fold_report);
    });
  }

  PredictionMatrix final_matrix;
  run_stage("fuse-across", [&] {
    final_matrix = fuse_across_folds(fold_outputs);
    write_predictions(final_matrix, out_dir / "final_predictions.csv");
  });

  run_stage("eval", [&] {
    std::unordered_map<std::string_view, ExpressionClass> label_by_id;
    label_by_id.reserve(samples.size());
    for (const auto& s : samples) {
      label_by_id.emplace(s.frame_id, s.label);
    }
    std::vector<ExpressionClass> preds;
    std::vector<ExpressionClass> labels;
    preds.reserve(final_matrix.frames.size());
    labels.reserve(final_matrix.frames.size());
    for (const auto& row : final_matrix.frames) {
      const auto it = label_by_id.find(row.frame_id);
      if (it == label_by_id.end()) {
        throw ValidationError("no label for predicted frame \"" +
                              row.frame_id + "\"");
      }
      preds.push_back(static_cast<ExpressionClass>(argmax_index(row.p)));
      labels.push_back(it->second);
    }
    result.final_report = evaluate(confusion(preds, labels));
    write_report(result.final_report, out_dir / "final_report.csv");
  });

  run_stage("submission", [&] {
    result.submission_path = out_dir / "submission.csv";
    write_submission(final_matrix, result.submission_path);
  });

  return result;
}

}  // namespace exprfuse
