#include "salguide/explain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "salguide/autograd.hpp"
#include "salguide/error.hpp"
#include "salguide/ops.hpp"

namespace salguide {

GradcamWeights gradcam_weights(const Tensor& score, const Tensor& activations,
                               bool create_graph) {
  const auto rank = activations.rank();
  if (rank != 3 && rank != 4) {
    throw InvalidShape("gradcam_weights: activations must be [c,h,w] or [n,c,h,w], got " +
                       shape_str(activations.shape()));
  }
  const auto grads = backward(score, {activations}, create_graph);
  GradcamWeights out;
  out.connected = grads.connected(activations);
  Tensor grad = grads.at(activations);
  if (rank == 3) grad = reshape(grad, {1, grad.dim(0), grad.dim(1), grad.dim(2)});
  const double plane = static_cast<double>(grad.dim(2) * grad.dim(3));
  out.weights = scale(spatial_sum(grad), 1.0 / plane);
  if (rank == 3) out.weights = reshape(out.weights, {activations.dim(0)});
  return out;
}

Tensor gradcam_heatmap(const Tensor& weights, const Tensor& activations) {
  if (activations.rank() != 3 || weights.rank() != 1 ||
      weights.dim(0) != activations.dim(0)) {
    throw InvalidShape("gradcam_heatmap: weights " + shape_str(weights.shape()) +
                       " do not match activations " + shape_str(activations.shape()));
  }
  const std::size_t c = activations.dim(0), h = activations.dim(1),
                    w = activations.dim(2);
  const auto combined =
      matmul(reshape(weights, {1, c}), reshape(activations, {c, h * w}));
  return relu(reshape(combined, {h, w}));
}

NormalizedMap normalize_minmax(const Tensor& raw) {
  const auto v = raw.values();
  if (v.empty()) throw InvalidShape("normalize_minmax: empty map");
  const auto lo = std::min_element(v.begin(), v.end());
  const auto hi = std::max_element(v.begin(), v.end());
  if (!(*hi > *lo)) return {Tensor::zeros(raw.shape()), true};
  // At ties the first extreme element receives the gradient.
  const auto flat = reshape(raw, {v.size()});
  const auto min = gather(flat, {static_cast<std::uint32_t>(lo - v.begin())}, {});
  const auto max = gather(flat, {static_cast<std::uint32_t>(hi - v.begin())}, {});
  const auto range = expand_scalar(sub(max, min), raw.shape());
  return {div(sub(raw, expand_scalar(min, raw.shape())), range), false};
}

TopK threshold_topk(const Tensor& normalized, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw InvalidParameter("k must lie in (0, 100]");
  }
  const auto v = normalized.values();
  const std::size_t n = v.size();
  if (n == 0) throw InvalidShape("threshold_topk: empty map");
  auto m = static_cast<std::size_t>(std::ceil(k_percent * static_cast<double>(n) / 100.0));
  m = std::clamp<std::size_t>(m, 1, n);

  std::vector<double> sorted(v.begin(), v.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1),
                   sorted.end(), std::greater<>());
  TopK out;
  out.threshold = sorted[m - 1];
  out.binary.resize(n);
  std::vector<double> indicator(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool keep = v[i] >= out.threshold && v[i] > 0.0;
    out.binary[i] = keep ? 1 : 0;
    indicator[i] = keep ? 1.0 : 0.0;
  }
  out.masked_soft = mul(normalized, Tensor::constant(normalized.shape(), std::move(indicator)));
  return out;
}

std::size_t SaliencyMap::salient_count() const {
  return static_cast<std::size_t>(std::count(binary.begin(), binary.end(), 1));
}

ScoreKind evaluation_score_kind(ScoreKind kind) {
  return kind == ScoreKind::kPureBce ? ScoreKind::kLogitAlg : kind;
}

SaliencyMap explain_sample(const ForwardTrace& trace, std::size_t index,
                           ScoreKind kind, bool for_training,
                           const ExplainOptions& options) {
  if (index >= trace.batch()) {
    throw InvalidShape("explain_sample: sample " + std::to_string(index) +
                       " outside batch of " + std::to_string(trace.batch()));
  }
  if (for_training && kind == ScoreKind::kPureBce) {
    throw ContractError("pure_bce has no training-time explanation");
  }
  const auto s = score(select(trace.logits, index), evaluation_score_kind(kind));
  const bool second_order = for_training && !options.stop_weights;
  const auto cam = gradcam_weights(s, trace.activations, second_order);

  std::optional<NoGradGuard> guard;
  if (!for_training) guard.emplace();

  SaliencyMap map;
  map.disconnected = !cam.connected;
  map.raw = gradcam_heatmap(select(cam.weights, index), select(trace.activations, index));
  map.height = map.raw.dim(0);
  map.width = map.raw.dim(1);
  auto norm = normalize_minmax(map.raw);
  map.normalized = norm.map;
  map.degenerate = norm.degenerate;
  auto top = threshold_topk(map.normalized, options.k_percent);
  map.threshold = top.threshold;
  map.binary = std::move(top.binary);
  map.masked_soft = top.masked_soft;
  return map;
}

}  // namespace salguide
