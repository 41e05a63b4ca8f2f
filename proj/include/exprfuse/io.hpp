#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exprfuse/core.hpp"
#include "exprfuse/folds.hpp"
#include "exprfuse/metrics.hpp"
#include "exprfuse/trainer.hpp"

namespace exprfuse {

// All writers are atomic (write to a temp file, then rename) and all
// numeric output uses shortest exact decimal form, so write/read is the
// identity and identical inputs give byte-identical files.

// Rows "frame_id,video_id,p0..p7" under a fixed header naming the class
// order. The reader validates and renormalizes via
// validate_prediction_matrix; a permuted header is rejected.
PredictionMatrix read_predictions(const std::filesystem::path& path);
void write_predictions(const PredictionMatrix& matrix,
                       const std::filesystem::path& path);

// Rows "frame_id,video_id,label,f0..f{D-1}".
std::vector<LabeledSample> read_dataset(const std::filesystem::path& path);
void write_dataset(std::span<const LabeledSample> samples,
                   const std::filesystem::path& path);

// "# k=<k> seed=<seed>" comment, "video_id,fold" header, one row per video.
FoldPlan read_fold_plan(const std::filesystem::path& path);
void write_fold_plan(const FoldPlan& plan, const std::filesystem::path& path);

// One "frame_id,label_index" line per frame, in matrix order.
void write_submission(const PredictionMatrix& matrix,
                      const std::filesystem::path& path);

// Machine-readable rows "metric,class,value".
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

// Human-readable key-value rendering of the same report.
std::string format_report(const EvalReport& report);

// Versioned text format: dimension and class order header, then weights and
// bias at full precision. Round-trips exactly.
LinearSoftmaxModel read_model(const std::filesystem::path& path);
void write_model(const LinearSoftmaxModel& model,
                 const std::filesystem::path& path);

namespace detail {
std::string format_double(double value);  // shortest exact decimal
double parse_double(std::string_view text, const std::string& where);
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);
std::vector<std::string> split_csv_line(std::string_view line);
}  // namespace detail

}  // namespace exprfuse
