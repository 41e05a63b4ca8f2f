#include "exprfuse/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <utility>

#include "exprfuse/rng.hpp"

namespace exprfuse {

namespace {

// Class means sit on a circle in the first two feature dimensions; higher
// dimensions carry only noise.
std::array<double, 2> class_mean(int cls, double separation) {
  const double angle =
      2.0 * std::numbers::pi * static_cast<double>(cls) / kNumClasses;
  return {separation * std::cos(angle), separation * std::sin(angle)};
}

std::string zero_padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

}  // namespace

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.videos < 1) {
    throw ValidationError("synthetic spec: videos must be >= 1");
  }
  if (spec.min_frames_per_video < 1 ||
      spec.max_frames_per_video < spec.min_frames_per_video) {
    throw ValidationError("synthetic spec: bad frames_per_video range");
  }
  if (spec.feature_dim < 2) {
    throw ValidationError("synthetic spec: feature_dim must be >= 2");
  }
  double prior_sum = 0.0;
  for (const double p : spec.class_priors) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("synthetic spec: priors must be finite and >= 0");
    }
    prior_sum += p;
  }
  if (std::abs(prior_sum - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "synthetic spec: class priors sum to " << prior_sum
       << ", expected 1";
    throw ValidationError(os.str());
  }
  for (const double s : spec.class_scales) {
    if (!std::isfinite(s) || s < 0.0) {
      throw ValidationError("synthetic spec: class scales must be >= 0");
    }
  }
  if (spec.label_noise < 0.0 || spec.label_noise >= 1.0) {
    throw ValidationError("synthetic spec: label_noise must lie in [0, 1)");
  }
  if (spec.simulated_sources < 0) {
    throw ValidationError("synthetic spec: simulated_sources must be >= 0");
  }
  if (std::cmp_not_equal(spec.source_flip_rates.size(),
                         spec.simulated_sources)) {
    throw ValidationError(
        "synthetic spec: need one flip rate per simulated source (" +
        std::to_string(spec.simulated_sources) + ")");
  }
  for (const double r : spec.source_flip_rates) {
    if (!std::isfinite(r) || r < 0.0 || r >= 1.0) {
      throw ValidationError("synthetic spec: flip rates must lie in [0, 1)");
    }
  }
  if (spec.source_softness < 0.0 || spec.source_softness >= 1.0) {
    throw ValidationError("synthetic spec: source_softness must lie in [0, 1)");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  std::mt19937_64 rng(spec.seed);

  SyntheticData data;
  const int frame_span =
      spec.max_frames_per_video - spec.min_frames_per_video + 1;
  for (int v = 0; v < spec.videos; ++v) {
    const std::string video_id = zero_padded("v", v, 3);
    const auto dominant = static_cast<int>(
        sample_discrete(spec.class_priors, rng));
    const int frames =
        spec.min_frames_per_video +
        static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(frame_span)));
    for (int f = 0; f < frames; ++f) {
      LabeledSample s;
      s.video_id = video_id;
      s.frame_id = video_id + zero_padded("_f", f, 4);
      int cls = dominant;
      if (uniform01(rng) < spec.label_noise) {
        cls = static_cast<int>(sample_discrete(spec.class_priors, rng));
      }
      s.label = class_from_index(cls);
      const auto mean = class_mean(cls, spec.class_separation);
      const double scale = spec.class_scales[static_cast<size_t>(cls)];
      s.features.resize(static_cast<size_t>(spec.feature_dim));
      s.features[0] = mean[0] + scale * standard_normal(rng);
      s.features[1] = mean[1] + scale * standard_normal(rng);
      for (int d = 2; d < spec.feature_dim; ++d) {
        s.features[static_cast<size_t>(d)] = scale * standard_normal(rng);
      }
      data.samples.push_back(std::move(s));
    }
  }

  for (int m = 0; m < spec.simulated_sources; ++m) {
    // Per-source confusion profile: when this source errs on true class t,
    // the wrong class is drawn from a seeded source-specific row.
    std::array<std::array<double, kNumClasses>, kNumClasses> confusion_rows{};
    for (int t = 0; t < kNumClasses; ++t) {
      for (int c = 0; c < kNumClasses; ++c) {
        confusion_rows[static_cast<size_t>(t)][static_cast<size_t>(c)] =
            (c == t) ? 0.0 : 0.25 + uniform01(rng);
      }
    }
    const double flip_rate = spec.source_flip_rates[static_cast<size_t>(m)];

    PredictionMatrix source;
    source.source_id = zero_padded("source", m, 1);
    source.frames.reserve(data.samples.size());
    for (const auto& s : data.samples) {
      const int truth = class_index(s.label);
      int predicted = truth;
      if (uniform01(rng) < flip_rate) {
        predicted = static_cast<int>(sample_discrete(
            confusion_rows[static_cast<size_t>(truth)], rng));
      }
      ProbArray noise{};
      double noise_sum = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        noise[static_cast<size_t>(c)] = uniform01(rng);
        noise_sum += noise[static_cast<size_t>(c)];
      }
      ProbArray p{};
      for (int c = 0; c < kNumClasses; ++c) {
        p[static_cast<size_t>(c)] =
            spec.source_softness * noise[static_cast<size_t>(c)] / noise_sum;
      }
      p[static_cast<size_t>(predicted)] += 1.0 - spec.source_softness;
      source.frames.push_back(PredictionRow{s.frame_id, s.video_id, p});
    }
    data.sources.push_back(std::move(source));
  }
  return data;
}

}  // namespace exprfuse
