#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exprfuse/errors.hpp"

namespace exprfuse {

inline constexpr int kNumClasses = 8;

// Class order is frozen: the six Ekman emotions, then neutral, then other.
// Every file format and index in the project uses this order.
enum class ExpressionClass : int {
  kAnger = 0,
  kDisgust = 1,
  kFear = 2,
  kHappiness = 3,
  kSadness = 4,
  kSurprise = 5,
  kNeutral = 6,
  kOther = 7,
};

const std::array<std::string_view, kNumClasses>& class_names();

// Index/name lookups throw ValidationError on unknown input.
ExpressionClass class_from_index(int index);
ExpressionClass class_from_name(std::string_view name);

inline int class_index(ExpressionClass c) { return static_cast<int>(c); }

using ProbArray = std::array<double, kNumClasses>;
using LogitArray = std::array<double, kNumClasses>;

// One model's per-frame class distribution: 8 entries in [0,1] summing to 1
// within 1e-6.
struct ProbabilityVector {
  ProbArray p{};
};

// Throws ValidationError if v is not a valid distribution. `context` is
// prepended to the message (typically a frame id).
void validate_probability_vector(const ProbabilityVector& v,
                                 std::string_view context = {});

struct PredictionRow {
  std::string frame_id;
  std::string video_id;
  ProbArray p{};
};

// Ordered per-frame distributions from one prediction source. Frame order is
// stable and preserved through every transform; frame ids are unique.
struct PredictionMatrix {
  std::string source_id;
  std::vector<PredictionRow> frames;
};

struct LabeledSample {
  std::string frame_id;
  std::string video_id;
  std::vector<double> features;
  ExpressionClass label = ExpressionClass::kAnger;
};

// Index of the maximal entry; ties resolve to the lowest index. No
// validation, usable on raw (unnormalized) score vectors.
int argmax_index(std::span<const double, kNumClasses> scores);

// Validating decision rule for probability vectors.
ExpressionClass argmax_label(const ProbabilityVector& p);

// Checks row validity and frame-id uniqueness. Rows whose sum lies within
// ±1e-3 of 1 are renormalized; rows already within 1e-9 are left untouched,
// which makes a second pass the identity.
PredictionMatrix validate_prediction_matrix(PredictionMatrix m);

}  // namespace exprfuse
