#include "exprfuse/trainer.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <utility>

#include "exprfuse/rng.hpp"

namespace exprfuse {

namespace {

LogitArray logits_for(const LinearSoftmaxModel& model,
                      std::span<const double> features) {
  LogitArray z = model.bias;
  for (int d = 0; d < model.dim; ++d) {
    const double x = features[static_cast<size_t>(d)];
    const size_t base = static_cast<size_t>(d) * kNumClasses;
    for (int c = 0; c < kNumClasses; ++c) {
      z[static_cast<size_t>(c)] += x * model.weights[base + static_cast<size_t>(c)];
    }
  }
  return z;
}

void check_feature_dim(const LabeledSample& s, int dim) {
  if (std::cmp_not_equal(s.features.size(), dim)) {
    throw ValidationError("sample \"" + s.frame_id + "\" has " +
                          std::to_string(s.features.size()) +
                          " features, expected " + std::to_string(dim));
  }
}

}  // namespace

void validate_train_config(const TrainConfig& config) {
  if (!(config.initial_lr > 0.0) || !std::isfinite(config.initial_lr)) {
    throw ValidationError("initial_lr must be > 0");
  }
  if (config.min_lr < 0.0 || config.min_lr > config.initial_lr) {
    throw ValidationError("min_lr must lie in [0, initial_lr]");
  }
  if (config.epochs < 0) {
    throw ValidationError("epochs must be >= 0");
  }
  if (config.batch_size < 1) {
    throw ValidationError("batch_size must be >= 1");
  }
  if (!(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0) ||
      !(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(config.adam_eps > 0.0)) {
    throw ValidationError("adam_eps must be > 0");
  }
  validate_focal_params(config.loss);
}

double cosine_lr(int t, int total_epochs, double eta_max, double eta_min) {
  if (total_epochs < 1) {
    throw ValidationError("cosine_lr: total epochs must be >= 1");
  }
  if (t < 0 || t > total_epochs) {
    throw ValidationError("cosine_lr: epoch " + std::to_string(t) +
                          " outside [0, " + std::to_string(total_epochs) + "]");
  }
  if (!(eta_max >= eta_min) || eta_min < 0.0) {
    throw ValidationError("cosine_lr: need eta_max >= eta_min >= 0");
  }
  if (t == 0) return eta_max;
  if (t == total_epochs) return eta_min;
  const double phase = std::numbers::pi * static_cast<double>(t) /
                       static_cast<double>(total_epochs);
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(phase));
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr,
               const TrainConfig& config) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    std::ostringstream os;
    os << "adam_step shape mismatch: params " << params.size() << ", grads "
       << grads.size() << ", state " << state.first_moment.size();
    throw ValidationError(os.str());
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw ValidationError("adam_step: non-finite gradient at index " +
                            std::to_string(i));
    }
  }
  ++state.step_count;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
    state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
    const double m_hat = state.first_moment[i] / bias1;
    const double v_hat = state.second_moment[i] / bias2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
  }
}

TrainResult train(std::span<const LabeledSample> samples,
                  const TrainConfig& config) {
  validate_train_config(config);
  if (samples.empty()) {
    throw ValidationError("train: empty dataset");
  }
  const auto dim = static_cast<int>(samples[0].features.size());
  if (dim < 1) {
    throw ValidationError("train: samples need at least one feature");
  }
  for (const auto& s : samples) {
    check_feature_dim(s, dim);
  }

  TrainResult result;
  result.model.dim = dim;
  result.model.weights.assign(static_cast<size_t>(dim) * kNumClasses, 0.0);

  const size_t num_params = static_cast<size_t>(dim) * kNumClasses + kNumClasses;
  AdamState state(num_params);
  std::vector<double> grad(num_params, 0.0);
  std::vector<double> params(num_params, 0.0);

  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(config.shuffle_seed);

  auto& model = result.model;
  const size_t bias_base = static_cast<size_t>(dim) * kNumClasses;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        cosine_lr(epoch, config.epochs, config.initial_lr, config.min_lr);
    shuffle_in_place(order, rng);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t stop = std::min(
          order.size(), start + static_cast<size_t>(config.batch_size));
      const auto batch_n = static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);

      for (size_t i = start; i < stop; ++i) {
        const auto& s = samples[order[i]];
        const LogitArray z = logits_for(model, s.features);
        const ProbArray prob = softmax(z);
        epoch_loss +=
            focal_loss(ProbabilityVector{prob}, s.label, config.loss);
        const LogitArray gz =
            detail::focal_grad_from_prob(prob, s.label, config.loss);
        for (int d = 0; d < dim; ++d) {
          const double x = s.features[static_cast<size_t>(d)];
          const size_t base = static_cast<size_t>(d) * kNumClasses;
          for (int c = 0; c < kNumClasses; ++c) {
            grad[base + static_cast<size_t>(c)] +=
                x * gz[static_cast<size_t>(c)];
          }
        }
        for (int c = 0; c < kNumClasses; ++c) {
          grad[bias_base + static_cast<size_t>(c)] += gz[static_cast<size_t>(c)];
        }
      }
      for (auto& g : grad) {
        g /= batch_n;
      }

      std::copy(model.weights.begin(), model.weights.end(), params.begin());
      std::copy(model.bias.begin(), model.bias.end(),
                params.begin() + static_cast<std::ptrdiff_t>(bias_base));
      adam_step(state, params, grad, lr, config);
      std::copy(params.begin(),
                params.begin() + static_cast<std::ptrdiff_t>(bias_base),
                model.weights.begin());
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(bias_base),
                params.end(), model.bias.begin());
    }
    result.epoch_mean_loss.push_back(epoch_loss /
                                     static_cast<double>(samples.size()));
  }
  return result;
}

PredictionMatrix predict(const LinearSoftmaxModel& model,
                         std::span<const LabeledSample> samples,
                         std::string source_id) {
  PredictionMatrix out;
  out.source_id = std::move(source_id);
  out.frames.reserve(samples.size());
  for (const auto& s : samples) {
    check_feature_dim(s, model.dim);
    const LogitArray z = logits_for(model, s.features);
    out.frames.push_back(PredictionRow{s.frame_id, s.video_id, softmax(z)});
  }
  return out;
}

}  // namespace exprfuse
