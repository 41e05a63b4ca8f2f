#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exprfuse/core.hpp"
#include "exprfuse/metrics.hpp"

namespace exprfuse {

// One non-negative multiplier per prediction source; at least one positive.
struct FusionWeights {
  std::vector<double> w;
};

void validate_fusion_weights(const FusionWeights& weights, size_t num_sources);

// A recorded fusion-weight configuration for one fold, in source order
// InceptionNet-v1 : ResNet50 : EfficientNet-b0, together with the F1 score
// reported for it. The reported scores are reference data from experiments
// on AffWild2 with pretrained CNN backbones; they are not reproducible here.
struct FusionPreset {
  std::string method;  // "Fusion 1" .. "Fusion 3"
  int fold = 1;        // 1..5
  FusionWeights weights;
  double reported_f1 = 0.0;

  std::string name() const;  // "<method> / Fold <fold>"
};

// The 15 shipped presets (3 methods x 5 folds).
std::span<const FusionPreset> fusion_presets();

// Lookup by full name, e.g. "Fusion 2 / Fold 1". Throws ValidationError if
// absent.
const FusionPreset& find_preset(std::string_view name);

// Candidate weights per source for the search; strictly increasing,
// non-negative. Default 0.0, 0.1, ..., 2.0.
struct WeightGrid {
  std::vector<double> values;
  bool exhaustive = true;

  static WeightGrid default_grid();
};

void validate_weight_grid(const WeightGrid& grid);

// Per frame: (sum_m w_m * p_m) / (sum_m w_m). All sources must cover the
// same frame ids; output frame order follows the first source.
PredictionMatrix fuse_within_fold(std::span<const PredictionMatrix> sources,
                                  const FusionWeights& weights);

// Same rule applied to the per-fold outputs; weights default to all-equal.
PredictionMatrix fuse_across_folds(
    std::span<const PredictionMatrix> fold_outputs,
    const std::optional<FusionWeights>& weights = std::nullopt);

struct SearchResult {
  FusionWeights weights;
  EvalReport report;
};

// Finds the weight tuple maximizing macro-F1 of the fused argmax
// predictions against the labels. Exhaustive mode scans the full grid
// product (minus the all-zero tuple) and breaks ties toward the
// lexicographically smallest tuple; coordinate-ascent mode starts from
// all-equal weights and sweeps one source at a time until no sweep improves.
SearchResult search_weights(std::span<const PredictionMatrix> sources,
                            std::span<const LabeledSample> labels,
                            const WeightGrid& grid);

}  // namespace exprfuse
