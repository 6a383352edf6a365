#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "salguide/tensor.hpp"

namespace salguide {

// Scalar explanation score derived from the two class logits (z0, z1).
enum class ScoreKind {
  kPureBce,    // baseline: no explanation score during training
  kLogitAlg,   // z1 - z0
  kLogitAbs,   // |z1 - z0|
  kLogitSqr,   // (z1 - z0)^2
  kLogitOnly,  // z1
  kProbAlg,    // p1 - p0
  kProbAbs,    // |p1 - p0|
  kProbSqr,    // (p1 - p0)^2
};

inline constexpr std::array<ScoreKind, 8> kAllScoreKinds{
    ScoreKind::kPureBce,  ScoreKind::kLogitAlg, ScoreKind::kLogitAbs,
    ScoreKind::kLogitSqr, ScoreKind::kLogitOnly, ScoreKind::kProbAlg,
    ScoreKind::kProbAbs,  ScoreKind::kProbSqr};

std::string_view to_string(ScoreKind kind);
std::optional<ScoreKind> parse_score_kind(std::string_view name);
// Comma-separated list of every valid name, for usage messages.
std::string score_kind_names();

// `logits` holds one sample's (z0, z1) as a [2] tensor. Throws ContractError
// for kPureBce. Differentiable with respect to the logits.
Tensor score(const Tensor& logits, ScoreKind kind);

}  // namespace salguide
