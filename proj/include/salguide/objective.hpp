#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "salguide/annotations.hpp"
#include "salguide/explain.hpp"
#include "salguide/model.hpp"
#include "salguide/scores.hpp"
#include "salguide/tensor.hpp"

namespace salguide {

// Mean binary cross-entropy of class-1 probabilities, labels in {0,1}.
// Evaluated as softplus of the signed logit difference, so it never takes
// the log of a rounded-off probability.
Tensor bce_loss(const Tensor& logits, std::span<const int> labels);

enum class ExplanationMode {
  kSoft,  // normalized values of the retained pixels (training)
  kHard,  // binary retained pixels (matches the top-precision metric)
};

struct ExplanationLoss {
  Tensor value;          // scalar, 1 - in-mask mass / total mass
  bool skipped = false;  // no retained saliency mass; value is 0
};

ExplanationLoss explanation_loss(const SaliencyMap& saliency, const Mask& mask,
                                 ExplanationMode mode);

struct ObjectiveOptions {
  ScoreKind kind = ScoreKind::kPureBce;
  double alpha = 0.0;
  double k_percent = kDefaultTopKPercent;
  bool stop_weights = false;
};

struct LossBreakdown {
  Tensor total;  // differentiable bce + alpha * exp
  double bce = 0.0;
  double exp = 0.0;  // unweighted mean explanation loss
  double total_value = 0.0;
  double alpha = 0.0;
  std::size_t n_explained = 0;
  std::size_t n_skipped_degenerate = 0;
};

// BCE over the whole batch plus alpha times the mean per-sample explanation
// loss over positive samples that carry a mask. Masks given for negative
// samples are ignored; pure_bce never builds explanations.
LossBreakdown batch_objective(const ForwardTrace& trace, std::span<const int> labels,
                              std::span<const std::optional<Mask>> masks,
                              const ObjectiveOptions& options);

}  // namespace salguide
