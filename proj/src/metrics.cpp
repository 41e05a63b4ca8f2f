#include "exprfuse/metrics.hpp"

#include <string>

namespace exprfuse {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (const auto c : row) {
      n += c;
    }
  }
  return n;
}

std::int64_t ConfusionMatrix::row_sum(int true_class) const {
  std::int64_t n = 0;
  for (const auto c : counts[static_cast<size_t>(true_class)]) {
    n += c;
  }
  return n;
}

std::int64_t ConfusionMatrix::col_sum(int predicted_class) const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    n += row[static_cast<size_t>(predicted_class)];
  }
  return n;
}

ConfusionMatrix confusion(std::span<const ExpressionClass> predictions,
                          std::span<const ExpressionClass> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("confusion: " + std::to_string(predictions.size()) +
                          " predictions vs " + std::to_string(labels.size()) +
                          " labels");
  }
  ConfusionMatrix cm;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int t = class_index(labels[i]);
    const int p = class_index(predictions[i]);
    ++cm.counts[static_cast<size_t>(t)][static_cast<size_t>(p)];
  }
  return cm;
}

std::array<double, kNumClasses> f1_per_class(const ConfusionMatrix& cm) {
  std::array<double, kNumClasses> f1{};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(
        cm.counts[static_cast<size_t>(c)][static_cast<size_t>(c)]);
    const auto col = static_cast<double>(cm.col_sum(c));
    const auto row = static_cast<double>(cm.row_sum(c));
    const double precision = col > 0 ? tp / col : 0.0;
    const double recall = row > 0 ? tp / row : 0.0;
    const double denom = precision + recall;
    f1[static_cast<size_t>(c)] = denom > 0 ? 2.0 * precision * recall / denom : 0.0;
  }
  return f1;
}

double macro_f1(const ConfusionMatrix& cm) {
  const auto f1 = f1_per_class(cm);
  double sum = 0.0;
  for (const auto v : f1) {
    sum += v;
  }
  return sum / kNumClasses;
}

EvalReport evaluate(const ConfusionMatrix& cm) {
  EvalReport report;
  report.per_class_f1 = f1_per_class(cm);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(
        cm.counts[static_cast<size_t>(c)][static_cast<size_t>(c)]);
    const auto col = static_cast<double>(cm.col_sum(c));
    const auto row = cm.row_sum(c);
    report.per_class_precision[static_cast<size_t>(c)] = col > 0 ? tp / col : 0.0;
    report.per_class_recall[static_cast<size_t>(c)] =
        row > 0 ? tp / static_cast<double>(row) : 0.0;
    report.support[static_cast<size_t>(c)] = row;
  }
  report.macro_f1 = macro_f1(cm);
  return report;
}

}  // namespace exprfuse
