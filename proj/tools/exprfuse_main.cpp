#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "exprfuse/folds.hpp"
#include "exprfuse/fusion.hpp"
#include "exprfuse/io.hpp"
#include "exprfuse/pipeline.hpp"
#include "exprfuse/synthetic.hpp"
#include "exprfuse/trainer.hpp"

namespace {

using namespace exprfuse;

// Weight tuples are colon-separated ratios, e.g. "0.5:1.1:0.5".
FusionWeights parse_weights(const std::string& text) {
  FusionWeights weights;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t colon = text.find(':', start);
    const std::string field = text.substr(
        start, colon == std::string::npos ? std::string::npos : colon - start);
    weights.w.push_back(detail::parse_double(field, "weights"));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return weights;
}

std::string weights_to_colon(const FusionWeights& weights) {
  std::string out;
  for (size_t i = 0; i < weights.w.size(); ++i) {
    if (i > 0) out += ':';
    out += detail::format_double(weights.w[i]);
  }
  return out;
}

// "min:step:max", e.g. "0:0.1:2".
WeightGrid parse_grid(const std::string& text) {
  const size_t c1 = text.find(':');
  const size_t c2 = c1 == std::string::npos ? std::string::npos
                                            : text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ValidationError("grid must be min:step:max, got \"" + text + "\"");
  }
  const double lo = detail::parse_double(text.substr(0, c1), "grid min");
  const double step =
      detail::parse_double(text.substr(c1 + 1, c2 - c1 - 1), "grid step");
  const double hi = detail::parse_double(text.substr(c2 + 1), "grid max");
  if (!(step > 0.0) || hi < lo) {
    throw ValidationError("grid needs step > 0 and max >= min");
  }
  WeightGrid grid;
  for (int i = 0;; ++i) {
    const double v = lo + step * i;
    if (v > hi + 1e-12) break;
    grid.values.push_back(v);
  }
  validate_weight_grid(grid);
  return grid;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t comma = text.find(',', start);
    const std::string field = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(detail::parse_double(field, what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<PredictionMatrix> load_sources(const std::vector<std::string>& paths) {
  if (paths.empty()) {
    throw ValidationError("at least one prediction file is required");
  }
  std::vector<PredictionMatrix> sources;
  for (const auto& p : paths) {
    sources.push_back(read_predictions(p));
  }
  return sources;
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-model multi-fold ensemble toolkit for 8-class "
               "expression recognition"};
  app.require_subcommand(1);

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic benchmark");
  std::string gen_out = "out";
  SyntheticSpec spec;
  std::string gen_priors;
  std::string gen_flip_rates;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--videos", spec.videos, "Number of videos");
  gen->add_option("--min-frames", spec.min_frames_per_video, "Frames per video, low end");
  gen->add_option("--max-frames", spec.max_frames_per_video, "Frames per video, high end");
  gen->add_option("--dim", spec.feature_dim, "Feature dimension");
  gen->add_option("--sources", spec.simulated_sources, "Simulated prediction sources");
  gen->add_option("--seed", spec.seed, "RNG seed");
  gen->add_option("--label-noise", spec.label_noise, "Per-frame label noise rate");
  gen->add_option("--separation", spec.class_separation, "Distance between class means");
  gen->add_option("--softness", spec.source_softness, "Probability mass spread off the predicted class");
  gen->add_option("--priors", gen_priors, "Eight comma-separated class priors");
  gen->add_option("--flip-rates", gen_flip_rates, "Comma-separated per-source flip rates");

  // split -----------------------------------------------------------------
  auto* split = app.add_subcommand("split", "Build a stratified grouped fold plan");
  std::string split_dataset;
  std::string split_out = "fold_plan.csv";
  int split_k = 5;
  std::uint64_t split_seed = 42;
  split->add_option("--dataset", split_dataset, "Dataset file")->required();
  split->add_option("--out", split_out, "Fold plan output");
  split->add_option("--k", split_k, "Number of folds");
  split->add_option("--seed", split_seed, "RNG seed");

  // train -----------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train the linear-softmax classifier");
  std::string train_dataset;
  std::string train_out = "model.txt";
  TrainConfig train_config;
  double train_gamma = -1.0;
  double train_alpha = -1.0;
  train_cmd->add_option("--dataset", train_dataset, "Dataset file")->required();
  train_cmd->add_option("--out", train_out, "Model output");
  train_cmd->add_option("--epochs", train_config.epochs, "Training epochs");
  train_cmd->add_option("--lr", train_config.initial_lr, "Initial learning rate");
  train_cmd->add_option("--min-lr", train_config.min_lr, "Final learning rate");
  train_cmd->add_option("--batch", train_config.batch_size, "Mini-batch size");
  train_cmd->add_option("--seed", train_config.shuffle_seed, "Shuffle seed");
  train_cmd->add_option("--gamma", train_gamma, "Focal focusing parameter for every class");
  train_cmd->add_option("--alpha", train_alpha, "Focal balance weight for every class");

  // predict ---------------------------------------------------------------
  auto* predict_cmd = app.add_subcommand("predict", "Predict per-frame distributions");
  std::string predict_model;
  std::string predict_dataset;
  std::string predict_out = "predictions.csv";
  std::string predict_submission;
  std::string predict_source_id = "linear-softmax";
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--dataset", predict_dataset, "Dataset file")->required();
  predict_cmd->add_option("--out", predict_out, "Prediction output");
  predict_cmd->add_option("--source-id", predict_source_id, "Source label for the output");
  predict_cmd->add_option("--submission", predict_submission,
                          "Also write the per-frame label sequence here");

  // fuse ------------------------------------------------------------------
  auto* fuse_cmd = app.add_subcommand("fuse", "Weighted fusion of prediction files");
  std::vector<std::string> fuse_inputs;
  std::string fuse_out = "fused.csv";
  std::string fuse_weights;
  std::string fuse_preset;
  std::string fuse_submission;
  fuse_cmd->add_option("--inputs", fuse_inputs, "Prediction files")->required()->expected(-1);
  fuse_cmd->add_option("--out", fuse_out, "Fused prediction output");
  fuse_cmd->add_option("--weights", fuse_weights,
                       "Colon-separated weights, e.g. 0.5:1.1:0.5 (default equal)");
  fuse_cmd->add_option("--preset", fuse_preset,
                       "Recorded configuration, e.g. \"Fusion 2 / Fold 1\"");
  fuse_cmd->add_option("--submission", fuse_submission,
                       "Also write the per-frame label sequence here");

  // search ----------------------------------------------------------------
  auto* search_cmd = app.add_subcommand("search", "Search fusion weights against labels");
  std::vector<std::string> search_inputs;
  std::string search_dataset;
  std::string search_grid = "0:0.1:2";
  std::string search_mode = "exhaustive";
  std::string search_report;
  search_cmd->add_option("--inputs", search_inputs, "Prediction files")->required()->expected(-1);
  search_cmd->add_option("--dataset", search_dataset, "Labeled dataset file")->required();
  search_cmd->add_option("--grid", search_grid, "Candidate weights as min:step:max");
  search_cmd->add_option("--mode", search_mode, "exhaustive or coordinate")
      ->check(CLI::IsMember({"exhaustive", "coordinate"}));
  search_cmd->add_option("--report", search_report, "Write the best report here");

  // eval ------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Macro-F1 report for predictions");
  std::string eval_predictions;
  std::string eval_dataset;
  std::string eval_out;
  eval_cmd->add_option("--predictions", eval_predictions, "Prediction file")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "Labeled dataset file")->required();
  eval_cmd->add_option("--out", eval_out, "Write the machine-readable report here");

  // pipeline ----------------------------------------------------------------
  auto* pipe_cmd = app.add_subcommand("pipeline", "Full split/train/fuse/eval run");
  std::string pipe_config;
  RunConfig run_config;
  std::string pipe_grid;
  bool pipe_no_trained = false;
  bool pipe_coordinate = false;
  pipe_cmd->add_option("--config", pipe_config, "JSON run configuration");
  auto* pipe_out_opt = pipe_cmd->add_option("--out", run_config.output_dir, "Output directory");
  auto* pipe_seed_opt = pipe_cmd->add_option("--seed", run_config.seed, "Seed for split and synthetic data");
  auto* pipe_k_opt = pipe_cmd->add_option("--k", run_config.k, "Number of folds");
  auto* pipe_preset_opt = pipe_cmd->add_option("--preset", run_config.preset,
                                               "Fusion preset instead of weight search");
  auto* pipe_grid_opt = pipe_cmd->add_option("--grid", pipe_grid, "Search grid as min:step:max");
  auto* pipe_dataset_opt = pipe_cmd->add_option("--dataset", run_config.dataset_path,
                                                "Dataset file (disables synthetic data)");
  auto* pipe_pred_opt = pipe_cmd->add_option("--predictions", run_config.prediction_paths,
                                             "Prediction source files");
  pipe_cmd->add_flag("--no-trained", pipe_no_trained, "Skip the trained source family");
  pipe_cmd->add_flag("--coordinate", pipe_coordinate,
                     "Coordinate-ascent weight search instead of exhaustive");

  // Bad usage is a validation error (exit 1); --help stays 0.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    if (!gen_priors.empty()) {
      const auto priors = parse_double_list(gen_priors, "priors");
      if (priors.size() != kNumClasses) {
        throw ValidationError("--priors needs exactly 8 values");
      }
      std::copy(priors.begin(), priors.end(), spec.class_priors.begin());
    }
    if (!gen_flip_rates.empty()) {
      spec.source_flip_rates = parse_double_list(gen_flip_rates, "flip rates");
    }
    const SyntheticData data = generate_synthetic(spec);
    std::filesystem::create_directories(gen_out);
    write_dataset(data.samples, std::filesystem::path(gen_out) / "dataset.csv");
    for (const auto& src : data.sources) {
      write_predictions(src,
                        std::filesystem::path(gen_out) / (src.source_id + ".csv"));
    }
    std::cout << "wrote " << data.samples.size() << " frames and "
              << data.sources.size() << " sources to " << gen_out << "\n";
  } else if (split->parsed()) {
    const auto samples = read_dataset(split_dataset);
    const FoldPlan plan = split_five_fold(samples, split_k, split_seed);
    write_fold_plan(plan, split_out);
    std::cout << "wrote " << split_out << " covering " << plan.assignment.size()
              << " videos\n";
  } else if (train_cmd->parsed()) {
    if (train_gamma >= 0.0) train_config.loss.gamma.fill(train_gamma);
    if (train_alpha >= 0.0) train_config.loss.alpha.fill(train_alpha);
    const auto samples = read_dataset(train_dataset);
    const TrainResult result = train(samples, train_config);
    write_model(result.model, train_out);
    if (!result.epoch_mean_loss.empty()) {
      std::printf("epochs %zu  first-loss %.6f  final-loss %.6f\n",
                  result.epoch_mean_loss.size(), result.epoch_mean_loss.front(),
                  result.epoch_mean_loss.back());
    }
    std::cout << "wrote " << train_out << "\n";
  } else if (predict_cmd->parsed()) {
    const auto model = read_model(predict_model);
    const auto samples = read_dataset(predict_dataset);
    const auto matrix = predict(model, samples, predict_source_id);
    write_predictions(matrix, predict_out);
    if (!predict_submission.empty()) {
      write_submission(matrix, predict_submission);
    }
    std::cout << "wrote " << predict_out << " (" << matrix.frames.size()
              << " frames)\n";
  } else if (fuse_cmd->parsed()) {
    const auto sources = load_sources(fuse_inputs);
    PredictionMatrix fused;
    if (!fuse_preset.empty()) {
      if (!fuse_weights.empty()) {
        throw ValidationError("--weights and --preset are mutually exclusive");
      }
      fused = fuse_within_fold(sources, find_preset(fuse_preset).weights);
    } else if (!fuse_weights.empty()) {
      fused = fuse_within_fold(sources, parse_weights(fuse_weights));
    } else {
      fused = fuse_across_folds(sources);
    }
    write_predictions(fused, fuse_out);
    if (!fuse_submission.empty()) {
      write_submission(fused, fuse_submission);
    }
    std::cout << "wrote " << fuse_out << "\n";
  } else if (search_cmd->parsed()) {
    const auto sources = load_sources(search_inputs);
    const auto samples = read_dataset(search_dataset);
    WeightGrid grid = parse_grid(search_grid);
    grid.exhaustive = search_mode == "exhaustive";
    const SearchResult result = search_weights(sources, samples, grid);
    std::cout << "best weights " << weights_to_colon(result.weights)
              << "  macro_f1 " << result.report.macro_f1 << "\n";
    if (!search_report.empty()) {
      write_report(result.report, search_report);
    }
  } else if (eval_cmd->parsed()) {
    const auto matrix = read_predictions(eval_predictions);
    const auto samples = read_dataset(eval_dataset);
    std::unordered_map<std::string, ExpressionClass> label_by_id;
    for (const auto& s : samples) {
      label_by_id.emplace(s.frame_id, s.label);
    }
    std::vector<ExpressionClass> preds;
    std::vector<ExpressionClass> labels;
    for (const auto& row : matrix.frames) {
      const auto it = label_by_id.find(row.frame_id);
      if (it == label_by_id.end()) {
        throw ValidationError("no label for frame \"" + row.frame_id + "\"");
      }
      preds.push_back(static_cast<ExpressionClass>(argmax_index(row.p)));
      labels.push_back(it->second);
    }
    const EvalReport report = evaluate(confusion(preds, labels));
    std::cout << format_report(report);
    if (!eval_out.empty()) {
      write_report(report, eval_out);
    }
  } else if (pipe_cmd->parsed()) {
    RunConfig config;
    if (!pipe_config.empty()) {
      config = read_run_config(pipe_config);
    }
    if (*pipe_out_opt) config.output_dir = run_config.output_dir;
    if (*pipe_seed_opt) {
      config.seed = run_config.seed;
      config.synthetic.seed = run_config.seed;
    }
    if (*pipe_k_opt) config.k = run_config.k;
    if (*pipe_preset_opt) config.preset = run_config.preset;
    if (*pipe_grid_opt) {
      const bool exhaustive = config.grid.exhaustive;
      config.grid = parse_grid(pipe_grid);
      config.grid.exhaustive = exhaustive;
    }
    if (*pipe_dataset_opt) {
      config.dataset_path = run_config.dataset_path;
      config.use_synthetic = false;
    }
    if (*pipe_pred_opt) config.prediction_paths = run_config.prediction_paths;
    if (pipe_no_trained) config.families.clear();
    if (pipe_coordinate) config.grid.exhaustive = false;

    const PipelineResult result = run_pipeline(config);
    for (size_t f = 0; f < result.fold_weights.size(); ++f) {
      std::printf("fold %zu  weights %s  held-out macro_f1 %.6f\n", f,
                  weights_to_colon(result.fold_weights[f]).c_str(),
                  result.fold_reports[f].macro_f1);
    }
    std::cout << format_report(result.final_report);
    std::cout << "submission " << result.submission_path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
