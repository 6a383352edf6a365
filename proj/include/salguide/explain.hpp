#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "salguide/model.hpp"
#include "salguide/scores.hpp"
#include "salguide/tensor.hpp"

namespace salguide {

inline constexpr double kDefaultTopKPercent = 50.0;

struct GradcamWeights {
  Tensor weights;          // [c] for [c,h,w] activations, [n,c] for [n,c,h,w]
  bool connected = true;   // false: score does not depend on the activations
};

// Spatial mean of d(score)/d(activations) per channel.
GradcamWeights gradcam_weights(const Tensor& score, const Tensor& activations,
                               bool create_graph);

// ReLU(sum_c weights[c] * activations[c]) as an [h,w] map.
Tensor gradcam_heatmap(const Tensor& weights, const Tensor& activations);

struct NormalizedMap {
  Tensor map;  // values in [0,1]
  bool degenerate = false;
};

// (H - min) / (max - min), differentiable through min and max as well;
// all zeros and degenerate when max == min.
NormalizedMap normalize_minmax(const Tensor& raw);

struct TopK {
  std::vector<std::uint8_t> binary;
  double threshold = 0.0;
  Tensor masked_soft;  // normalized * binary, binary held constant
};

// threshold = m-th largest value with m = ceil(k/100 * N); a pixel is kept
// when it is >= threshold and strictly positive.
TopK threshold_topk(const Tensor& normalized, double k_percent = kDefaultTopKPercent);

struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor raw;
  Tensor normalized;
  double threshold = 0.0;
  std::vector<std::uint8_t> binary;
  Tensor masked_soft;
  bool degenerate = false;
  bool disconnected = false;

  std::size_t salient_count() const;
};

struct ExplainOptions {
  double k_percent = kDefaultTopKPercent;
  // Treat the channel weights as constants during training.
  bool stop_weights = false;
};

// Score used to build evaluation saliency. pure_bce has no score of its own
// and is explained through the class-contrastive logit difference.
ScoreKind evaluation_score_kind(ScoreKind kind);

// Grad-CAM for sample `index` of a forward trace. With for_training the map
// stays connected to the model parameters (second-order through the weights
// unless stop_weights); otherwise every tensor in the result is constant.
SaliencyMap explain_sample(const ForwardTrace& trace, std::size_t index,
                           ScoreKind kind, bool for_training,
                           const ExplainOptions& options = {});

}  // namespace salguide
