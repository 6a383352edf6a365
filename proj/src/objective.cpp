#include "salguide/objective.hpp"

#include "salguide/error.hpp"
#include "salguide/ops.hpp"

namespace salguide {

Tensor bce_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(1) != 2 || logits.dim(0) != labels.size()) {
    throw InvalidShape("bce_loss: logits " + shape_str(logits.shape()) + " for " +
                       std::to_string(labels.size()) + " labels");
  }
  // -log p1 = softplus(z0 - z1), -log p0 = softplus(z1 - z0)
  std::vector<double> sign(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw InvalidParameter("labels must be 0 or 1");
    }
    sign[i] = labels[i] == 1 ? -1.0 : 1.0;
  }
  const auto diff = sub(column(logits, 1), column(logits, 0));
  return mean(softplus(mul(diff, Tensor::constant({labels.size()}, std::move(sign)))));
}

ExplanationLoss explanation_loss(const SaliencyMap& saliency, const Mask& mask,
                                 ExplanationMode mode) {
  if (saliency.height != mask.height || saliency.width != mask.width) {
    throw InvalidShape("explanation_loss: saliency " + std::to_string(saliency.height) +
                       "x" + std::to_string(saliency.width) + " vs mask " +
                       std::to_string(mask.height) + "x" + std::to_string(mask.width));
  }
  const Shape grid{mask.height, mask.width};
  Tensor retained;
  if (mode == ExplanationMode::kSoft) {
    retained = saliency.masked_soft;
  } else {
    retained = Tensor::constant(grid, {saliency.binary.begin(), saliency.binary.end()});
  }
  const auto total = sum(retained);
  if (!(total.item() > 0.0)) return {Tensor::scalar(0.0), true};
  const auto inside = sum(mul(retained, Tensor::constant(grid, {mask.cells.begin(), mask.cells.end()})));
  return {shift(neg(div(inside, total)), 1.0), false};
}

LossBreakdown batch_objective(const ForwardTrace& trace, std::span<const int> labels,
                              std::span<const std::optional<Mask>> masks,
                              const ObjectiveOptions& options) {
  if (!(options.alpha >= 0.0)) {
    throw InvalidParameter("alpha must be non-negative");
  }
  if (masks.size() != labels.size()) {
    throw InvalidShape("batch_objective: one optional mask per sample required");
  }
  LossBreakdown out;
  out.alpha = options.alpha;
  const auto bce = bce_loss(trace.logits, labels);
  out.bce = bce.item();

  Tensor exp_sum;
  if (options.kind != ScoreKind::kPureBce) {
    const ExplainOptions explain{options.k_percent, options.stop_weights};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 1 || !masks[i]) continue;
      const auto sal = explain_sample(trace, i, options.kind, true, explain);
      if (sal.degenerate) {
        ++out.n_skipped_degenerate;
        continue;
      }
      auto loss = explanation_loss(sal, *masks[i], ExplanationMode::kSoft);
      if (loss.skipped) {
        ++out.n_skipped_degenerate;
        continue;
      }
      exp_sum = exp_sum.defined() ? add(exp_sum, loss.value) : loss.value;
      ++out.n_explained;
    }
  }
  if (out.n_explained > 0) {
    const auto exp = scale(exp_sum, 1.0 / static_cast<double>(out.n_explained));
    out.exp = exp.item();
    out.total = add(bce, scale(exp, options.alpha));
  } else {
    out.total = bce;
  }
  out.total_value = out.total.item();
  return out;
}

}  // namespace salguide
