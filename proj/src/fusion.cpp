#include "exprfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <unordered_map>

namespace exprfuse {

namespace {

const std::vector<FusionPreset>& preset_catalog() {
  static const std::vector<FusionPreset> catalog = [] {
    struct Row {
      const char* method;
      int fold;
      double w1, w2, w3;
      double f1;
    };
    // Weight order: InceptionNet-v1 : ResNet50 : EfficientNet-b0.
    const Row rows[] = {
        {"Fusion 1", 1, 1.0, 1.0, 1.0, 0.331},
        {"Fusion 1", 2, 1.0, 1.0, 1.0, 0.265},
        {"Fusion 1", 3, 1.0, 1.0, 1.0, 0.246},
        {"Fusion 1", 4, 1.0, 1.0, 1.0, 0.313},
        {"Fusion 1", 5, 1.0, 1.0, 1.0, 0.326},
        {"Fusion 2", 1, 0.5, 1.1, 0.5, 0.323},
        {"Fusion 2", 2, 0.6, 0.4, 1.2, 0.274},
        {"Fusion 2", 3, 0.5, 0.5, 2.0, 0.280},
        {"Fusion 2", 4, 0.6, 0.4, 1.1, 0.325},
        {"Fusion 2", 5, 0.6, 0.4, 1.2, 0.331},
        {"Fusion 3", 1, 0.4, 1.0, 0.6, 0.324},
        {"Fusion 3", 2, 0.6, 0.0, 0.7, 0.278},
        {"Fusion 3", 3, 0.5, 0.0, 2.0, 0.285},
        {"Fusion 3", 4, 0.4, 0.0, 0.6, 0.328},
        {"Fusion 3", 5, 0.5, 0.0, 1.1, 0.326},
    };
    std::vector<FusionPreset> out;
    for (const auto& r : rows) {
      out.push_back(FusionPreset{r.method, r.fold,
                                 FusionWeights{{r.w1, r.w2, r.w3}}, r.f1});
    }
    return out;
  }();
  return catalog;
}

// Rows of every source for one frame, in the first source's frame order.
struct AlignedFrames {
  std::vector<std::vector<const ProbArray*>> rows;  // [frame][source]
  const PredictionMatrix* first = nullptr;
};

void throw_frame_mismatch(const PredictionMatrix& a, const PredictionMatrix& b) {
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  std::unordered_map<std::string, bool> in_b;
  for (const auto& row : b.frames) {
    in_b.emplace(row.frame_id, true);
  }
  std::unordered_map<std::string, bool> in_a;
  for (const auto& row : a.frames) {
    in_a.emplace(row.frame_id, true);
    if (!in_b.count(row.frame_id)) {
      only_a.push_back(row.frame_id);
    }
  }
  for (const auto& row : b.frames) {
    if (!in_a.count(row.frame_id)) {
      only_b.push_back(row.frame_id);
    }
  }
  std::ostringstream os;
  os << "frame sets differ between sources \"" << a.source_id << "\" and \""
     << b.source_id << "\":";
  int listed = 0;
  for (const auto& id : only_a) {
    if (listed >= 10) break;
    os << " -" << id;
    ++listed;
  }
  for (const auto& id : only_b) {
    if (listed >= 10) break;
    os << " +" << id;
    ++listed;
  }
  const size_t diff = only_a.size() + only_b.size();
  if (std::cmp_greater(diff, listed)) {
    os << " (and " << diff - static_cast<size_t>(listed) << " more)";
  }
  throw ValidationError(os.str());
}

AlignedFrames align_sources(std::span<const PredictionMatrix> sources) {
  if (sources.empty()) {
    throw ValidationError("fusion requires at least one source");
  }
  const auto& first = sources[0];
  AlignedFrames aligned;
  aligned.first = &first;
  aligned.rows.resize(first.frames.size());
  for (size_t i = 0; i < first.frames.size(); ++i) {
    aligned.rows[i].reserve(sources.size());
    aligned.rows[i].push_back(&first.frames[i].p);
  }
  for (size_t m = 1; m < sources.size(); ++m) {
    const auto& src = sources[m];
    if (src.frames.size() != first.frames.size()) {
      throw_frame_mismatch(first, src);
    }
    std::unordered_map<std::string_view, const ProbArray*> by_id;
    by_id.reserve(src.frames.size());
    for (const auto& row : src.frames) {
      by_id.emplace(row.frame_id, &row.p);
    }
    for (size_t i = 0; i < first.frames.size(); ++i) {
      const auto it = by_id.find(first.frames[i].frame_id);
      if (it == by_id.end()) {
        throw_frame_mismatch(first, src);
      }
      aligned.rows[i].push_back(it->second);
    }
  }
  return aligned;
}

ProbArray fuse_row(const std::vector<const ProbArray*>& rows,
                   std::span<const double> weights, double weight_sum) {
  ProbArray out{};
  for (size_t m = 0; m < rows.size(); ++m) {
    const double w = weights[m];
    if (w == 0.0) continue;
    const auto& p = *rows[m];
    for (int c = 0; c < kNumClasses; ++c) {
      out[static_cast<size_t>(c)] += w * p[static_cast<size_t>(c)];
    }
  }
  for (auto& v : out) {
    v /= weight_sum;
  }
  return out;
}

PredictionMatrix weighted_fuse(std::span<const PredictionMatrix> sources,
                               const FusionWeights& weights) {
  if (sources.empty()) {
    throw ValidationError("fusion requires at least one source");
  }
  validate_fusion_weights(weights, sources.size());
  const AlignedFrames aligned = align_sources(sources);
  double weight_sum = 0.0;
  for (const double w : weights.w) {
    weight_sum += w;
  }

  PredictionMatrix out;
  std::string label = "fused[";
  for (size_t m = 0; m < sources.size(); ++m) {
    if (m > 0) label += '+';
    label += sources[m].source_id;
  }
  label += ']';
  out.source_id = std::move(label);
  out.frames.reserve(aligned.first->frames.size());
  for (size_t i = 0; i < aligned.first->frames.size(); ++i) {
    const auto& ref = aligned.first->frames[i];
    out.frames.push_back(PredictionRow{
        ref.frame_id, ref.video_id,
        fuse_row(aligned.rows[i], weights.w, weight_sum)});
  }
  return out;
}

// Evaluation core shared by both search modes: macro-F1 of the fused argmax
// against pre-aligned labels.
struct SearchContext {
  AlignedFrames aligned;
  std::vector<ExpressionClass> labels;  // in aligned frame order

  ConfusionMatrix score(std::span<const double> weights) const {
    double weight_sum = 0.0;
    for (const double w : weights) {
      weight_sum += w;
    }
    std::vector<ExpressionClass> preds;
    preds.reserve(aligned.rows.size());
    for (const auto& rows : aligned.rows) {
      const ProbArray fused = fuse_row(rows, weights, weight_sum);
      preds.push_back(static_cast<ExpressionClass>(argmax_index(fused)));
    }
    return confusion(preds, labels);
  }
};

SearchContext make_search_context(std::span<const PredictionMatrix> sources,
                                  std::span<const LabeledSample> labels) {
  SearchContext ctx;
  ctx.aligned = align_sources(sources);
  std::unordered_map<std::string_view, ExpressionClass> by_id;
  by_id.reserve(labels.size());
  for (const auto& s : labels) {
    by_id.emplace(s.frame_id, s.label);
  }
  if (by_id.size() != labels.size()) {
    throw ValidationError("search_weights: duplicate frame_id in labels");
  }
  if (by_id.size() != ctx.aligned.first->frames.size()) {
    throw ValidationError(
        "search_weights: " + std::to_string(by_id.size()) + " labels vs " +
        std::to_string(ctx.aligned.first->frames.size()) + " frames");
  }
  ctx.labels.reserve(ctx.aligned.first->frames.size());
  for (const auto& row : ctx.aligned.first->frames) {
    const auto it = by_id.find(row.frame_id);
    if (it == by_id.end()) {
      throw ValidationError("search_weights: no label for frame \"" +
                            row.frame_id + "\"");
    }
    ctx.labels.push_back(it->second);
  }
  return ctx;
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Order-independent reduction: higher macro-F1 wins, ties go to the
// lexicographically smallest tuple.
bool improves(double cand_f1, std::span<const double> cand,
              double best_f1, std::span<const double> best) {
  if (cand_f1 != best_f1) return cand_f1 > best_f1;
  return lex_less(cand, best);
}

SearchResult exhaustive_search(const SearchContext& ctx,
                               const WeightGrid& grid, size_t num_sources) {
  std::vector<size_t> idx(num_sources, 0);
  std::vector<double> tuple(num_sources);
  std::vector<double> best_tuple;
  double best_f1 = -1.0;
  while (true) {
    bool all_zero = true;
    for (size_t m = 0; m < num_sources; ++m) {
      tuple[m] = grid.values[idx[m]];
      if (tuple[m] != 0.0) all_zero = false;
    }
    if (!all_zero) {
      const double f1 = macro_f1(ctx.score(tuple));
      if (best_tuple.empty() || improves(f1, tuple, best_f1, best_tuple)) {
        best_f1 = f1;
        best_tuple = tuple;
      }
    }
    // Odometer with the rightmost digit fastest: lexicographic enumeration.
    size_t pos = num_sources;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < grid.values.size()) break;
      idx[pos] = 0;
      if (pos == 0) {
        if (best_tuple.empty()) {
          throw ValidationError(
              "search_weights: grid contains only the all-zero tuple");
        }
        return SearchResult{FusionWeights{best_tuple},
                            evaluate(ctx.score(best_tuple))};
      }
    }
  }
}

SearchResult coordinate_search(const SearchContext& ctx,
                               const WeightGrid& grid, size_t num_sources) {
  // Start from all-equal weights at the grid value closest to 1.
  double start = grid.values.front();
  for (const double v : grid.values) {
    if (std::abs(v - 1.0) <= std::abs(start - 1.0)) {
      start = v;
    }
  }
  if (start == 0.0) {
    throw ValidationError(
        "search_weights: coordinate mode needs a positive grid value");
  }
  std::vector<double> current(num_sources, start);
  double current_f1 = macro_f1(ctx.score(current));

  bool improved = true;
  while (improved) {
    improved = false;
    for (size_t m = 0; m < num_sources; ++m) {
      std::vector<double> cand = current;
      for (const double v : grid.values) {
        cand[m] = v;
        if (std::all_of(cand.begin(), cand.end(),
                        [](double w) { return w == 0.0; })) {
          continue;
        }
        const double f1 = macro_f1(ctx.score(cand));
        if (f1 > current_f1) {
          current_f1 = f1;
          current = cand;
          improved = true;
        }
      }
    }
  }
  return SearchResult{FusionWeights{current}, evaluate(ctx.score(current))};
}

}  // namespace

std::string FusionPreset::name() const {
  return method + " / Fold " + std::to_string(fold);
}

std::span<const FusionPreset> fusion_presets() { return preset_catalog(); }

const FusionPreset& find_preset(std::string_view name) {
  for (const auto& preset : preset_catalog()) {
    if (preset.name() == name) {
      return preset;
    }
  }
  throw ValidationError("unknown fusion preset \"" + std::string(name) +
                        "\" (expected e.g. \"Fusion 2 / Fold 1\")");
}

WeightGrid WeightGrid::default_grid() {
  WeightGrid grid;
  for (int i = 0; i <= 20; ++i) {
    grid.values.push_back(static_cast<double>(i) / 10.0);
  }
  return grid;
}

void validate_fusion_weights(const FusionWeights& weights,
                             size_t num_sources) {
  if (weights.w.size() != num_sources) {
    throw ValidationError(
        "fusion weights count " + std::to_string(weights.w.size()) +
        " does not match source count " + std::to_string(num_sources));
  }
  bool any_positive = false;
  for (size_t i = 0; i < weights.w.size(); ++i) {
    const double w = weights.w[i];
    if (!std::isfinite(w) || w < 0.0) {
      std::ostringstream os;
      os << "fusion weight [" << i << "] must be finite and >= 0, got " << w;
      throw ValidationError(os.str());
    }
    if (w > 0.0) any_positive = true;
  }
  if (!any_positive) {
    throw ValidationError("fusion weights are all zero");
  }
}

void validate_weight_grid(const WeightGrid& grid) {
  if (grid.values.empty()) {
    throw ValidationError("weight grid is empty");
  }
  for (size_t i = 0; i < grid.values.size(); ++i) {
    const double v = grid.values[i];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "weight grid value [" << i << "] must be finite and >= 0, got "
         << v;
      throw ValidationError(os.str());
    }
    if (i > 0 && v <= grid.values[i - 1]) {
      throw ValidationError("weight grid values must be strictly increasing");
    }
  }
  if (grid.values.back() == 0.0) {
    throw ValidationError("weight grid needs at least one positive value");
  }
}

PredictionMatrix fuse_within_fold(std::span<const PredictionMatrix> sources,
                                  const FusionWeights& weights) {
  return weighted_fuse(sources, weights);
}

PredictionMatrix fuse_across_folds(
    std::span<const PredictionMatrix> fold_outputs,
    const std::optional<FusionWeights>& weights) {
  if (weights.has_value()) {
    return weighted_fuse(fold_outputs, *weights);
  }
  FusionWeights equal;
  equal.w.assign(fold_outputs.size(), 1.0);
  return weighted_fuse(fold_outputs, equal);
}

SearchResult search_weights(std::span<const PredictionMatrix> sources,
                            std::span<const LabeledSample> labels,
                            const WeightGrid& grid) {
  validate_weight_grid(grid);
  const SearchContext ctx = make_search_context(sources, labels);
  if (grid.exhaustive) {
    return exhaustive_search(ctx, grid, sources.size());
  }
  return coordinate_search(ctx, grid, sources.size());
}

}  // namespace exprfuse
