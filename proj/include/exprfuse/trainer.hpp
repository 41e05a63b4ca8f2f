#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exprfuse/core.hpp"
#include "exprfuse/focal_loss.hpp"

namespace exprfuse {

// Linear classifier over feature vectors: logits = W^T x + b with W stored
// row-major as dim x 8. Stands in for the CNN backbones as a prediction
// source at desk scale.
struct LinearSoftmaxModel {
  int dim = 0;
  std::vector<double> weights;  // dim * kNumClasses, row-major by feature
  std::array<double, kNumClasses> bias{};

  double weight_at(int feature, int cls) const {
    return weights[static_cast<size_t>(feature) * kNumClasses +
                   static_cast<size_t>(cls)];
  }
};

struct TrainConfig {
  double initial_lr = 0.001;
  double min_lr = 0.0;
  int epochs = 30;
  int batch_size = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  FocalLossParams loss;
  std::uint64_t shuffle_seed = 0;
};

void validate_train_config(const TrainConfig& config);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;

  explicit AdamState(size_t num_params = 0)
      : first_moment(num_params, 0.0), second_moment(num_params, 0.0) {}
};

// eta_min + 0.5*(eta_max - eta_min)*(1 + cos(pi*t/T)), single cycle, no warm
// restarts. Endpoints are exact: t=0 returns eta_max, t=T returns eta_min.
double cosine_lr(int t, int total_epochs, double eta_max, double eta_min);

// One bias-corrected Adam update in place; step_count increments by 1.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr,
               const TrainConfig& config);

struct TrainResult {
  LinearSoftmaxModel model;
  std::vector<double> epoch_mean_loss;  // one entry per completed epoch
};

// Mini-batch focal-loss training with Adam and a per-epoch cosine schedule.
// Parameters start at zero; the per-epoch shuffle is seeded; the last
// partial batch is kept.
TrainResult train(std::span<const LabeledSample> samples,
                  const TrainConfig& config);

// softmax(W^T x + b) per sample, frame order preserved.
PredictionMatrix predict(const LinearSoftmaxModel& model,
                         std::span<const LabeledSample> samples,
                         std::string source_id = "linear-softmax");

}  // namespace exprfuse
