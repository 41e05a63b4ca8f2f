#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exprfuse/core.hpp"
#include "exprfuse/fusion.hpp"
#include "exprfuse/metrics.hpp"
#include "exprfuse/synthetic.hpp"
#include "exprfuse/trainer.hpp"

namespace exprfuse {

// One trained prediction source per entry. A non-negative gamma overrides
// the focusing parameter of the shared TrainConfig for this family; each
// family also gets its own shuffle-seed offset so two families with the
// same settings still differ.
struct TrainedFamily {
  std::string name = "linear-softmax";
  double gamma = -1.0;
};

struct RunConfig {
  // Input files; leave dataset empty to generate the synthetic benchmark.
  std::string dataset_path;
  std::vector<std::string> prediction_paths;
  std::string fold_plan_path;  // optional: reuse an existing plan
  std::string output_dir = "out";

  int k = 5;
  std::uint64_t seed = 42;
  bool use_synthetic = true;
  SyntheticSpec synthetic;

  TrainConfig train;
  std::vector<TrainedFamily> families = {TrainedFamily{}};

  WeightGrid grid = WeightGrid::default_grid();
  std::string preset;  // optional: "Fusion 2" or "Fusion 2 / Fold 1"
};

void validate_run_config(const RunConfig& config);

RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const RunConfig& config,
                      const std::filesystem::path& path);
RunConfig parse_run_config_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);

struct PipelineResult {
  EvalReport final_report;
  std::vector<FusionWeights> fold_weights;
  std::vector<EvalReport> fold_reports;  // on each fold's held-out frames
  std::filesystem::path submission_path;
};

// split -> per fold (train families, pick weights on the held-out split) ->
// fuse within folds over the common evaluation frame set -> fuse across
// folds -> evaluate -> submission. Artifacts land in config.output_dir;
// a failing stage keeps everything written so far.
PipelineResult run_pipeline(const RunConfig& config);

}  // namespace exprfuse
