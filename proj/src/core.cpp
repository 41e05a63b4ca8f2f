#include "exprfuse/core.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace exprfuse {

namespace {

constexpr double kSumTolerance = 1e-6;       // ProbabilityVector invariant
constexpr double kRowSumRenorm = 1e-3;       // matrix rows inside this get rescaled
constexpr double kRowSumExact = 1e-9;        // rows inside this are accepted as-is

std::string prefix(std::string_view context) {
  return context.empty() ? std::string() : std::string(context) + ": ";
}

}  // namespace

const std::array<std::string_view, kNumClasses>& class_names() {
  static const std::array<std::string_view, kNumClasses> names = {
      "anger",    "disgust",  "fear",    "happiness",
      "sadness",  "surprise", "neutral", "other"};
  return names;
}

ExpressionClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw ValidationError("class index out of range 0..7: " +
                          std::to_string(index));
  }
  return static_cast<ExpressionClass>(index);
}

ExpressionClass class_from_name(std::string_view name) {
  const auto& names = class_names();
  for (int i = 0; i < kNumClasses; ++i) {
    if (names[static_cast<size_t>(i)] == name) {
      return static_cast<ExpressionClass>(i);
    }
  }
  throw ValidationError("unknown expression class name: \"" +
                        std::string(name) + "\"");
}

void validate_probability_vector(const ProbabilityVector& v,
                                 std::string_view context) {
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    const double x = v.p[static_cast<size_t>(i)];
    if (!std::isfinite(x)) {
      throw ValidationError(prefix(context) + "non-finite probability at class " +
                            std::string(class_names()[static_cast<size_t>(i)]));
    }
    if (x < 0.0) {
      std::ostringstream os;
      os << prefix(context) << "negative probability " << x << " at class "
         << class_names()[static_cast<size_t>(i)];
      throw ValidationError(os.str());
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream os;
    os << prefix(context) << "probabilities sum to " << sum
       << ", expected 1 within " << kSumTolerance;
    throw ValidationError(os.str());
  }
}

int argmax_index(std::span<const double, kNumClasses> scores) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i) {
    if (scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

ExpressionClass argmax_label(const ProbabilityVector& p) {
  validate_probability_vector(p);
  return static_cast<ExpressionClass>(argmax_index(p.p));
}

PredictionMatrix validate_prediction_matrix(PredictionMatrix m) {
  std::unordered_set<std::string> seen;
  seen.reserve(m.frames.size());
  for (auto& row : m.frames) {
    if (!seen.insert(row.frame_id).second) {
      throw ValidationError("duplicate frame_id \"" + row.frame_id +
                            "\" in prediction matrix \"" + m.source_id + "\"");
    }
    double sum = 0.0;
    for (int i = 0; i < kNumClasses; ++i) {
      const double x = row.p[static_cast<size_t>(i)];
      if (!std::isfinite(x)) {
        throw ValidationError("frame \"" + row.frame_id +
                              "\": non-finite probability at class " +
                              std::string(class_names()[static_cast<size_t>(i)]));
      }
      if (x < 0.0) {
        std::ostringstream os;
        os << "frame \"" << row.frame_id << "\": negative probability " << x
           << " at class " << class_names()[static_cast<size_t>(i)];
        throw ValidationError(os.str());
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > kRowSumRenorm) {
      std::ostringstream os;
      os << "frame \"" << row.frame_id << "\": probabilities sum to " << sum
         << ", outside the renormalization window 1±" << kRowSumRenorm;
      throw ValidationError(os.str());
    }
    if (std::abs(sum - 1.0) > kRowSumExact) {
      for (auto& x : row.p) {
        x /= sum;
      }
    }
  }
  return m;
}

}  // namespace exprfuse
