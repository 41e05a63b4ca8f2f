#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "exprfuse/core.hpp"

namespace exprfuse {

// Stand-in for the out-of-scope video corpus: Gaussian feature clusters,
// frames grouped into videos with one dominant class each, and noisy
// per-source prediction files so fusion has signal to exploit.
struct SyntheticSpec {
  int videos = 50;
  int min_frames_per_video = 60;
  int max_frames_per_video = 140;
  // Imbalanced by default: most frames are neutral or happiness.
  std::array<double, kNumClasses> class_priors = {0.06, 0.03, 0.04, 0.22,
                                                  0.09, 0.06, 0.42, 0.08};
  int feature_dim = 16;
  double class_separation = 3.0;             // distance scale between class means
  std::array<double, kNumClasses> class_scales = {1, 1, 1, 1, 1, 1, 1, 1};
  double label_noise = 0.45;                 // chance a frame departs from the
                                             // video's dominant class; high
                                             // enough that single videos do
                                             // not pin a fold's class mix
  int simulated_sources = 3;
  std::vector<double> source_flip_rates = {0.35, 0.30, 0.25};
  double source_softness = 0.35;             // probability mass spread off the
                                             // predicted class
  std::uint64_t seed = 42;
};

void validate_synthetic_spec(const SyntheticSpec& spec);

struct SyntheticData {
  std::vector<LabeledSample> samples;
  std::vector<PredictionMatrix> sources;
};

// Deterministic per seed. Each source flips the true label at its own rate
// with its own seeded confusion profile, so their error patterns differ.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace exprfuse
