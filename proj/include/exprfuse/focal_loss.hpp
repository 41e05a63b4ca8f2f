#pragma once

#include <span>
#include <utility>
#include <vector>

#include "exprfuse/core.hpp"

namespace exprfuse {

// Per-class balance weights and focusing parameters. gamma is stored per
// class; the default (all classes share gamma=2) is the shared-gamma setup.
struct FocalLossParams {
  ProbArray alpha{1, 1, 1, 1, 1, 1, 1, 1};
  ProbArray gamma{2, 2, 2, 2, 2, 2, 2, 2};
};

// Throws ValidationError when an entry is negative or non-finite.
void validate_focal_params(const FocalLossParams& params);

// Numerically stable softmax (max-subtracted).
ProbArray softmax(const LogitArray& z);

// alpha_k * (1 - p_k)^gamma_k * (-log p_k) for the true class k. p_k is
// clamped to 1e-12 before the log, so degenerate predictions stay finite.
double focal_loss(const ProbabilityVector& p, ExpressionClass label,
                  const FocalLossParams& params);

// Mean focal loss over a non-empty batch.
double focal_loss_batch(
    std::span<const std::pair<ProbabilityVector, ExpressionClass>> samples,
    const FocalLossParams& params);

// d focal_loss(softmax(z), label) / dz. With gamma=0 and alpha=1 this is
// exactly softmax(z) - onehot(label).
LogitArray focal_loss_grad(const LogitArray& z, ExpressionClass label,
                           const FocalLossParams& params);

namespace detail {
// Gradient w.r.t. logits given the already-computed softmax output. Shared
// by focal_loss_grad and the trainer so both see identical arithmetic.
LogitArray focal_grad_from_prob(const ProbArray& prob, ExpressionClass label,
                                const FocalLossParams& params);
}  // namespace detail

}  // namespace exprfuse
