#include "exprfuse/folds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <unordered_map>

#include "exprfuse/rng.hpp"

namespace exprfuse {

namespace {

constexpr double kSizeTiebreakWeight = 0.01;

struct VideoStats {
  std::string id;
  std::int64_t frames = 0;
  std::array<std::int64_t, kNumClasses> per_class{};
};

}  // namespace

FoldPlan split_five_fold(std::span<const LabeledSample> samples, int k,
                         std::uint64_t seed) {
  if (k < 2) {
    throw ValidationError("split_five_fold: k must be >= 2, got " +
                          std::to_string(k));
  }

  // Collect per-video stats in first-appearance order.
  std::vector<VideoStats> videos;
  std::unordered_map<std::string, size_t> index;
  std::array<std::int64_t, kNumClasses> global_counts{};
  for (const auto& s : samples) {
    auto [it, inserted] = index.try_emplace(s.video_id, videos.size());
    if (inserted) {
      videos.push_back(VideoStats{s.video_id, 0, {}});
    }
    auto& v = videos[it->second];
    ++v.frames;
    ++v.per_class[static_cast<size_t>(class_index(s.label))];
    ++global_counts[static_cast<size_t>(class_index(s.label))];
  }
  if (std::cmp_less(videos.size(), k)) {
    throw ValidationError("split_five_fold: " + std::to_string(videos.size()) +
                          " distinct videos but k=" + std::to_string(k));
  }

  const auto total = static_cast<double>(samples.size());
  std::array<double, kNumClasses> global_frac{};
  for (int c = 0; c < kNumClasses; ++c) {
    global_frac[static_cast<size_t>(c)] =
        static_cast<double>(global_counts[static_cast<size_t>(c)]) / total;
  }

  // Seeded shuffle, then a stable sort by frame count: equal-sized videos
  // keep their shuffled order.
  std::mt19937_64 rng(seed);
  shuffle_in_place(videos, rng);
  std::stable_sort(videos.begin(), videos.end(),
                   [](const VideoStats& a, const VideoStats& b) {
                     return a.frames > b.frames;
                   });

  std::vector<std::int64_t> fold_frames(static_cast<size_t>(k), 0);
  std::vector<std::array<std::int64_t, kNumClasses>> fold_counts(
      static_cast<size_t>(k));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;

  // Greedy steepest descent on the total stratification deviation: each
  // video goes where it most reduces (or least increases) the summed
  // per-class distance to the fold's target share. Counts against targets
  // keep empty folds well-defined; a small size term breaks ties toward the
  // emptier fold.
  const double target_share = total / static_cast<double>(k);
  for (const auto& v : videos) {
    int best_fold = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int f = 0; f < k; ++f) {
      const auto fs = static_cast<size_t>(f);
      const double new_frames =
          static_cast<double>(fold_frames[fs] + v.frames);
      double class_delta = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        const auto cs = static_cast<size_t>(c);
        const double target_c = target_share * global_frac[cs];
        const auto before = static_cast<double>(fold_counts[fs][cs]);
        const auto after = before + static_cast<double>(v.per_class[cs]);
        class_delta +=
            (std::abs(after - target_c) - std::abs(before - target_c)) /
            target_share;
      }
      const double cost =
          class_delta + kSizeTiebreakWeight * new_frames / target_share;
      if (cost < best_cost) {
        best_cost = cost;
        best_fold = f;
      }
    }
    const auto bs = static_cast<size_t>(best_fold);
    fold_frames[bs] += v.frames;
    for (int c = 0; c < kNumClasses; ++c) {
      fold_counts[bs][static_cast<size_t>(c)] +=
          v.per_class[static_cast<size_t>(c)];
    }
    plan.assignment.emplace(v.id, best_fold);
  }

  // Local improvement on the stratification criterion itself: relocate or
  // swap videos while that lexicographically lowers (worst, total) per-fold
  // proportion deviation, never letting a fold drift more than the largest
  // video away from its target size. The objective strictly decreases, so
  // the loop terminates.
  std::int64_t max_video_frames = 0;
  for (const auto& v : videos) {
    max_video_frames = std::max(max_video_frames, v.frames);
  }
  auto proportion_objective = [&]() {
    double worst = 0.0;
    double sum = 0.0;
    for (int f = 0; f < k; ++f) {
      const auto fs = static_cast<size_t>(f);
      if (fold_frames[fs] == 0) {
        return std::pair<double, double>{2.0 * kNumClasses, 2.0 * kNumClasses};
      }
      for (int c = 0; c < kNumClasses; ++c) {
        const auto cs = static_cast<size_t>(c);
        const double frac = static_cast<double>(fold_counts[fs][cs]) /
                            static_cast<double>(fold_frames[fs]);
        const double dev = std::abs(frac - global_frac[cs]);
        worst = std::max(worst, dev);
        sum += dev;
      }
    }
    return std::pair<double, double>{worst, sum};
  };
  auto size_ok = [&](size_t fs) {
    return std::abs(static_cast<double>(fold_frames[fs]) - target_share) <=
           static_cast<double>(max_video_frames);
  };
  auto transfer = [&](const VideoStats& v, size_t from, size_t to) {
    for (int c = 0; c < kNumClasses; ++c) {
      const auto cs = static_cast<size_t>(c);
      fold_counts[from][cs] -= v.per_class[cs];
      fold_counts[to][cs] += v.per_class[cs];
    }
    fold_frames[from] -= v.frames;
    fold_frames[to] += v.frames;
  };

  auto current = proportion_objective();
  auto try_move = [&](const VideoStats& va) {
    const auto fa = static_cast<size_t>(plan.assignment.at(va.id));
    for (int f = 0; f < k; ++f) {
      const auto fs = static_cast<size_t>(f);
      if (fs == fa) continue;
      transfer(va, fa, fs);
      const auto candidate = proportion_objective();
      if (candidate < current && size_ok(fa) && size_ok(fs)) {
        current = candidate;
        plan.assignment[va.id] = f;
        return true;
      }
      transfer(va, fs, fa);
    }
    return false;
  };
  auto try_swap = [&](size_t a) {
    const auto& va = videos[a];
    const auto fa = static_cast<size_t>(plan.assignment.at(va.id));
    for (size_t b = a + 1; b < videos.size(); ++b) {
      const auto& vb = videos[b];
      const auto fb = static_cast<size_t>(plan.assignment.at(vb.id));
      if (fb == fa) continue;
      transfer(va, fa, fb);
      transfer(vb, fb, fa);
      const auto candidate = proportion_objective();
      if (candidate < current && size_ok(fa) && size_ok(fb)) {
        current = candidate;
        plan.assignment[va.id] = static_cast<int>(fb);
        plan.assignment[vb.id] = static_cast<int>(fa);
        return true;
      }
      transfer(va, fb, fa);
      transfer(vb, fa, fb);
    }
    return false;
  };

  bool any_change = true;
  while (any_change) {
    any_change = false;
    for (size_t a = 0; a < videos.size(); ++a) {
      if (try_move(videos[a]) || try_swap(a)) {
        any_change = true;
      }
    }
  }
  return plan;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> fold_view(
    std::span<const LabeledSample> samples, const FoldPlan& plan,
    int test_fold) {
  if (test_fold < 0 || test_fold >= plan.k) {
    throw ValidationError("fold_view: test_fold " + std::to_string(test_fold) +
                          " out of range 0.." + std::to_string(plan.k - 1));
  }
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  for (const auto& s : samples) {
    const auto it = plan.assignment.find(s.video_id);
    if (it == plan.assignment.end()) {
      throw ValidationError("fold_view: video \"" + s.video_id +
                            "\" missing from the fold plan");
    }
    if (it->second == test_fold) {
      test.push_back(s);
    } else {
      train.push_back(s);
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace exprfuse
