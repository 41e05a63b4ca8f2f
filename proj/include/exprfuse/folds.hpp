#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "exprfuse/core.hpp"

namespace exprfuse {

// Deterministic assignment of every video to one of k folds. The map is
// ordered by video_id so serialization is canonical.
struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;
};

// Splits whole videos into k folds of similar frame count whose per-class
// proportions track the global distribution. Videos are placed in
// descending frame-count order (seeded shuffle among equals); each goes to
// the fold that currently minimizes size imbalance plus class-proportion
// deviation. Same samples and seed always yield the same plan.
FoldPlan split_five_fold(std::span<const LabeledSample> samples, int k,
                         std::uint64_t seed);

// test = samples whose video maps to test_fold, train = the rest; input
// order is preserved within each part.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> fold_view(
    std::span<const LabeledSample> samples, const FoldPlan& plan,
    int test_fold);

}  // namespace exprfuse
