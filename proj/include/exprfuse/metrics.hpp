#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "exprfuse/core.hpp"

namespace exprfuse {

// counts[t][p] = samples with true class t predicted as p.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t total() const;
  std::int64_t row_sum(int true_class) const;
  std::int64_t col_sum(int predicted_class) const;
};

struct EvalReport {
  std::array<double, kNumClasses> per_class_f1{};
  std::array<double, kNumClasses> per_class_precision{};
  std::array<double, kNumClasses> per_class_recall{};
  std::array<std::int64_t, kNumClasses> support{};
  double macro_f1 = 0.0;
};

// Tallies (label, prediction) pairs; the lists must have equal length.
ConfusionMatrix confusion(std::span<const ExpressionClass> predictions,
                          std::span<const ExpressionClass> labels);

// F1 = 2*precision*recall / (precision + recall), with every 0/0 defined
// as 0 so absent classes score 0.
std::array<double, kNumClasses> f1_per_class(const ConfusionMatrix& cm);

// Mean of the 8 per-class F1 values; the divisor is always 8.
double macro_f1(const ConfusionMatrix& cm);

EvalReport evaluate(const ConfusionMatrix& cm);

}  // namespace exprfuse
