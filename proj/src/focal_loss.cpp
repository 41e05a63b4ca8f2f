#include "exprfuse/focal_loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace exprfuse {

namespace {
constexpr double kLogFloor = 1e-12;
}

void validate_focal_params(const FocalLossParams& params) {
  for (int i = 0; i < kNumClasses; ++i) {
    const double a = params.alpha[static_cast<size_t>(i)];
    const double g = params.gamma[static_cast<size_t>(i)];
    if (!std::isfinite(a) || a < 0.0) {
      std::ostringstream os;
      os << "focal alpha[" << i << "] must be finite and >= 0, got " << a;
      throw ValidationError(os.str());
    }
    if (!std::isfinite(g) || g < 0.0) {
      std::ostringstream os;
      os << "focal gamma[" << i << "] must be finite and >= 0, got " << g;
      throw ValidationError(os.str());
    }
  }
}

ProbArray softmax(const LogitArray& z) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (!std::isfinite(z[static_cast<size_t>(i)])) {
      throw ValidationError("non-finite logit at index " + std::to_string(i));
    }
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  ProbArray out{};
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    out[static_cast<size_t>(i)] = std::exp(z[static_cast<size_t>(i)] - zmax);
    sum += out[static_cast<size_t>(i)];
  }
  for (auto& v : out) {
    v /= sum;
  }
  return out;
}

double focal_loss(const ProbabilityVector& p, ExpressionClass label,
                  const FocalLossParams& params) {
  validate_probability_vector(p);
  validate_focal_params(params);
  const auto k = static_cast<size_t>(label);
  const double pk = std::max(p.p[k], kLogFloor);
  const double alpha = params.alpha[k];
  const double gamma = params.gamma[k];
  return alpha * std::pow(1.0 - pk, gamma) * (-std::log(pk));
}

double focal_loss_batch(
    std::span<const std::pair<ProbabilityVector, ExpressionClass>> samples,
    const FocalLossParams& params) {
  if (samples.empty()) {
    throw ValidationError("focal_loss_batch: empty sample list");
  }
  double sum = 0.0;
  for (const auto& [p, label] : samples) {
    sum += focal_loss(p, label, params);
  }
  return sum / static_cast<double>(samples.size());
}

namespace detail {

LogitArray focal_grad_from_prob(const ProbArray& prob, ExpressionClass label,
                                const FocalLossParams& params) {
  const auto k = static_cast<size_t>(label);
  const double pk = prob[k];
  const double alpha = params.alpha[k];
  const double gamma = params.gamma[k];
  const double one_minus = 1.0 - pk;

  // coeff = d loss / d p_k  *  p_k, folded so the gamma=0 case is exact and
  // the p_k -> 1 limit (coeff -> 0 for gamma > 0) needs no pow of 0 with a
  // negative exponent.
  double coeff;
  if (gamma == 0.0) {
    coeff = -alpha;
  } else if (one_minus <= 0.0) {
    coeff = 0.0;
  } else {
    const double log_pk = std::log(std::max(pk, kLogFloor));
    coeff = alpha * (gamma * pk * std::pow(one_minus, gamma - 1.0) * log_pk -
                     std::pow(one_minus, gamma));
  }

  LogitArray grad{};
  for (int j = 0; j < kNumClasses; ++j) {
    const double delta = (static_cast<size_t>(j) == k) ? 1.0 : 0.0;
    grad[static_cast<size_t>(j)] = coeff * (delta - prob[static_cast<size_t>(j)]);
  }
  return grad;
}

}  // namespace detail

LogitArray focal_loss_grad(const LogitArray& z, ExpressionClass label,
                           const FocalLossParams& params) {
  validate_focal_params(params);
  const ProbArray prob = softmax(z);
  return detail::focal_grad_from_prob(prob, label, params);
}

}  // namespace exprfuse
