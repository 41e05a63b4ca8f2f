#include <doctest.h>

#include <cmath>

#include "exprfuse/trainer.hpp"
#include "test_util.hpp"

using namespace exprfuse;

namespace {

// Three well-separated Gaussian blobs in 2-D, 100 frames per class.
std::vector<LabeledSample> blob_benchmark(std::uint64_t seed) {
  const double means[3][2] = {{0.0, 3.0}, {3.0, -2.0}, {-3.0, -2.0}};
  std::mt19937_64 rng(seed);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 300; ++i) {
    const int cls = i % 3;
    LabeledSample s;
    s.frame_id = "b" + std::to_string(i);
    s.video_id = "blob" + std::to_string(cls);
    s.label = class_from_index(cls);
    s.features = {means[cls][0] + 0.5 * standard_normal(rng),
                  means[cls][1] + 0.5 * standard_normal(rng)};
    samples.push_back(std::move(s));
  }
  return samples;
}

double training_accuracy(const LinearSoftmaxModel& model,
                         std::span<const LabeledSample> samples) {
  const auto preds = predict(model, samples);
  int hits = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (argmax_index(preds.frames[i].p) == class_index(samples[i].label)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("cosine schedule endpoints are exact") {
  CHECK(cosine_lr(0, 30, 0.001, 0.0) == 0.001);
  CHECK(cosine_lr(30, 30, 0.001, 0.0) == 0.0);
  CHECK(cosine_lr(10, 10, 0.01, 0.002) == 0.002);
  CHECK(cosine_lr(15, 30, 0.001, 0.0) ==
        doctest::Approx(0.0005).epsilon(1e-12));
}

TEST_CASE("cosine schedule is non-increasing") {
  double previous = cosine_lr(0, 50, 0.7, 0.1);
  for (int t = 1; t <= 50; ++t) {
    const double lr = cosine_lr(t, 50, 0.7, 0.1);
    CHECK(lr <= previous);
    previous = lr;
  }
}

TEST_CASE("cosine schedule rejects bad arguments") {
  CHECK_THROWS_AS(cosine_lr(-1, 10, 0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(cosine_lr(11, 10, 0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(cosine_lr(0, 0, 0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(cosine_lr(0, 10, 0.1, 0.2), ValidationError);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  TrainConfig config;
  AdamState state(3);
  std::vector<double> params = {1.0, -2.0, 0.5};
  const std::vector<double> grads = {0.0, 0.0, 0.0};
  adam_step(state, params, grads, 0.05, config);
  CHECK(params == std::vector<double>{1.0, -2.0, 0.5});
  CHECK(state.step_count == 1);
}

TEST_CASE("first adam step moves each coordinate by about lr") {
  TrainConfig config;
  AdamState state(2);
  std::vector<double> params = {0.0, 0.0};
  const std::vector<double> grads = {2.5, -0.003};
  adam_step(state, params, grads, 0.05, config);
  CHECK(params[0] == doctest::Approx(-0.05).epsilon(1e-5));
  CHECK(params[1] == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("adam shape and finiteness errors") {
  TrainConfig config;
  AdamState state(2);
  std::vector<double> params = {0.0, 0.0};
  const std::vector<double> short_grads = {1.0};
  CHECK_THROWS_AS(adam_step(state, params, short_grads, 0.05, config),
                  ValidationError);
  const std::vector<double> bad = {1.0, std::nan("")};
  CHECK_THROWS_WITH_AS(adam_step(state, params, bad, 0.05, config),
                       doctest::Contains("index 1"), ValidationError);
}

TEST_CASE("adam minimizes (w-3)^2 and matches a scalar reference") {
  TrainConfig config;
  AdamState state(1);
  std::vector<double> w = {0.0};

  // Hand-stepped reference implementation of the same update rule.
  double ref_w = 0.0;
  double ref_m = 0.0;
  double ref_v = 0.0;
  for (int step = 1; step <= 500; ++step) {
    const double g = 2.0 * (w[0] - 3.0);
    adam_step(state, w, std::vector<double>{g}, 0.05, config);

    const double ref_g = 2.0 * (ref_w - 3.0);
    ref_m = 0.9 * ref_m + 0.1 * ref_g;
    ref_v = 0.999 * ref_v + 0.001 * ref_g * ref_g;
    const double m_hat = ref_m / (1.0 - std::pow(0.9, step));
    const double v_hat = ref_v / (1.0 - std::pow(0.999, step));
    ref_w -= 0.05 * m_hat / (std::sqrt(v_hat) + 1e-8);

    CHECK(w[0] == doctest::Approx(ref_w).epsilon(1e-9));
  }
  CHECK(state.step_count == 500);
  CHECK(std::abs(w[0] - 3.0) < 0.01);
}

TEST_CASE("zero epochs returns the zero model") {
  auto samples = blob_benchmark(5);
  TrainConfig config;
  config.epochs = 0;
  const TrainResult result = train(samples, config);
  CHECK(result.epoch_mean_loss.empty());
  for (const double w : result.model.weights) {
    CHECK(w == 0.0);
  }
  for (const double b : result.model.bias) {
    CHECK(b == 0.0);
  }
}

TEST_CASE("training is deterministic") {
  auto samples = blob_benchmark(7);
  TrainConfig config;
  config.epochs = 5;
  const TrainResult a = train(samples, config);
  const TrainResult b = train(samples, config);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.bias == b.model.bias);
  CHECK(a.epoch_mean_loss == b.epoch_mean_loss);
}

TEST_CASE("blob benchmark reaches 95% accuracy in 30 epochs") {
  auto samples = blob_benchmark(42);
  TrainConfig config;  // defaults: lr 0.001, batch 256, 30 epochs, cosine
  const TrainResult result = train(samples, config);
  CHECK(training_accuracy(result.model, samples) >= 0.95);
  CHECK(result.epoch_mean_loss.back() < result.epoch_mean_loss.front());
}

TEST_CASE("train validates inputs") {
  const std::vector<LabeledSample> empty;
  CHECK_THROWS_AS(train(empty, TrainConfig{}), ValidationError);

  auto samples = blob_benchmark(3);
  samples[10].features.push_back(1.0);
  CHECK_THROWS_WITH_AS(train(samples, TrainConfig{}), doctest::Contains("b10"),
                       ValidationError);

  auto good = blob_benchmark(3);
  TrainConfig bad;
  bad.initial_lr = 0.0;
  CHECK_THROWS_AS(train(good, bad), ValidationError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(good, bad), ValidationError);
}

TEST_CASE("zero model predicts the uniform distribution") {
  auto samples = blob_benchmark(9);
  LinearSoftmaxModel model;
  model.dim = 2;
  model.weights.assign(16, 0.0);
  const auto preds = predict(model, samples);
  CHECK(preds.frames.size() == samples.size());
  for (const auto& row : preds.frames) {
    for (const double p : row.p) {
      CHECK(p == 0.125);
    }
  }
}

TEST_CASE("predictions are deterministic and valid") {
  auto samples = blob_benchmark(11);
  TrainConfig config;
  config.epochs = 3;
  const auto model = train(samples, config).model;
  const auto a = predict(model, samples);
  const auto b = predict(model, samples);
  for (size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].p == b.frames[i].p);
    validate_probability_vector(ProbabilityVector{a.frames[i].p},
                                a.frames[i].frame_id);
    CHECK(a.frames[i].frame_id == samples[i].frame_id);
  }
}

TEST_CASE("predict rejects a dimension mismatch") {
  LinearSoftmaxModel model;
  model.dim = 3;
  model.weights.assign(24, 0.0);
  auto samples = blob_benchmark(13);  // 2-D features
  CHECK_THROWS_AS(predict(model, samples), ValidationError);
}
