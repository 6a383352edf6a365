#include "salguide/scores.hpp"

#include "salguide/error.hpp"
#include "salguide/ops.hpp"

namespace salguide {

namespace {
constexpr std::array<std::string_view, 8> kNames{
    "pure_bce", "logit_alg", "logit_abs", "logit_sqr",
    "logit_only", "prob_alg", "prob_abs", "prob_sqr"};
}

std::string_view to_string(ScoreKind kind) {
  return kNames[static_cast<std::size_t>(kind)];
}

std::optional<ScoreKind> parse_score_kind(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAllScoreKinds[i];
  }
  return std::nullopt;
}

std::string score_kind_names() {
  std::string out;
  for (auto n : kNames) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

Tensor score(const Tensor& logits, ScoreKind kind) {
  if (kind == ScoreKind::kPureBce) {
    throw ContractError("pure_bce defines no explanation score");
  }
  if (logits.shape() != Shape{2}) {
    throw InvalidShape("score expects a [2] logit pair, got " +
                       shape_str(logits.shape()));
  }
  if (kind == ScoreKind::kLogitOnly) return select(logits, 1);

  Tensor diff;
  switch (kind) {
    case ScoreKind::kLogitAlg:
    case ScoreKind::kLogitAbs:
    case ScoreKind::kLogitSqr:
      diff = sub(select(logits, 1), select(logits, 0));
      break;
    default: {
      const auto probs = select(softmax2(reshape(logits, {1, 2})), 0);
      diff = sub(select(probs, 1), select(probs, 0));
    }
  }
  switch (kind) {
    case ScoreKind::kLogitAbs:
    case ScoreKind::kProbAbs:
      return abs(diff);
    case ScoreKind::kLogitSqr:
    case ScoreKind::kProbSqr:
      return square(diff);
    default:
      return diff;
  }
}

}  // namespace salguide
