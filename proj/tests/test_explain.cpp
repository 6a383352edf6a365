#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "salguide/autograd.hpp"
#include "salguide/error.hpp"
#include "salguide/explain.hpp"
#include "salguide/ops.hpp"
#include "support.hpp"

using namespace salguide;
using testing::random_constant;
using testing::random_parameter;
using testing::rel_err;
using testing::to_vector;

namespace {

// logits = linear(gap(A), W, b) for A of shape [n,c,h,w].
struct LinearHead {
  Tensor w;
  Tensor b;
  Tensor operator()(const Tensor& a) const { return linear(global_avg_pool(a), w, b); }
};

ForwardTrace make_trace(const Tensor& activations, const LinearHead& head) {
  ForwardTrace t;
  t.activations = activations;
  t.logits = head(activations);
  t.saliency_h = activations.dim(2);
  t.saliency_w = activations.dim(3);
  return t;
}

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

TEST_CASE("gradcam_weights examples") {
  auto a = Tensor::parameter({1, 2, 2}, {1.0, -2.0, 3.0, 0.5});
  const auto w = gradcam_weights(sum(a), a, false);
  CHECK(w.connected);
  CHECK(to_vector(w.weights) == std::vector<double>{1.0});

  Rng rng(1);
  auto b = random_parameter({2, 2, 2}, rng);
  CHECK(to_vector(gradcam_weights(mean(b), b, false).weights) ==
        std::vector<double>{0.125, 0.125});

  auto other = random_parameter({2}, rng);
  const auto off = gradcam_weights(sum(other), b, false);
  CHECK_FALSE(off.connected);
  CHECK(to_vector(off.weights) == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_AS(gradcam_weights(sum(other), other, false), InvalidShape);
}

TEST_CASE("gradcam_weights keep a graph only when asked") {
  Rng rng(2);
  auto a = random_parameter({2, 3, 3}, rng);
  const auto s = sum(square(a));
  CHECK_FALSE(gradcam_weights(s, a, false).weights.requires_grad());
  CHECK(gradcam_weights(s, a, true).weights.requires_grad());
}

TEST_CASE("gradcam_weights match brute-force differences on a small net") {
  Rng rng(3);
  for (int instance = 0; instance < 5; ++instance) {
    const auto x = random_constant({1, 1, 6, 6}, rng);
    const auto k = random_constant({3, 1, 3, 3}, rng);
    auto a = Tensor::parameter({1, 3, 6, 6}, to_vector(softplus(conv2d(x, k, {1, 1}))));
    const LinearHead head{random_constant({2, 3}, rng), random_constant({2}, rng)};
    auto s_of = [&] { return score(select(head(a), 0), ScoreKind::kLogitSqr); };
    const auto w = gradcam_weights(s_of(), a, false);
    const auto jac = testing::fd_gradient(
        [&] {
          NoGradGuard g;
          return s_of().item();
        },
        a);
    std::vector<double> oracle(3, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < 36; ++p) oracle[c] += jac[c * 36 + p] / 36.0;
    }
    CHECK(rel_err(to_vector(w.weights), oracle) <= 1e-4);
  }
}

TEST_CASE("gradcam_heatmap examples") {
  const auto one = Tensor::constant({1, 1, 2}, {-1.0, 2.0});
  CHECK(to_vector(gradcam_heatmap(Tensor::constant({1}, {1.0}), one)) ==
        std::vector<double>{0.0, 2.0});
  Rng rng(4);
  const auto a = random_constant({3, 4, 4}, rng);
  for (double v : to_vector(gradcam_heatmap(Tensor::zeros({3}), a))) CHECK(v == 0.0);
  const auto chan = random_constant({1, 4, 4}, rng);
  std::vector<double> twice(to_vector(chan));
  twice.insert(twice.end(), twice.begin(), twice.end());
  const auto cancel = gradcam_heatmap(Tensor::constant({2}, {1.0, -1.0}),
                                      Tensor::constant({2, 4, 4}, twice));
  for (double v : cancel.values()) CHECK(v == 0.0);
  CHECK(gradcam_heatmap(Tensor::zeros({3}), a).shape() == Shape{4, 4});
  CHECK_THROWS_AS(gradcam_heatmap(Tensor::zeros({2}), a), InvalidShape);
}

TEST_CASE("heatmap is equivariant under channel permutation") {
  Rng rng(5);
  const auto a = random_constant({4, 3, 3}, rng);
  const auto w = random_constant({4}, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<double> pa, pw;
  for (auto c : perm) {
    pw.push_back(w.at(c));
    for (std::size_t i = 0; i < 9; ++i) pa.push_back(a.at(c * 9 + i));
  }
  const auto h = gradcam_heatmap(w, a);
  const auto hp = gradcam_heatmap(Tensor::constant({4}, pw), Tensor::constant({4, 3, 3}, pa));
  CHECK(rel_err(to_vector(hp), to_vector(h)) <= 1e-15);
}

TEST_CASE("normalize_minmax examples") {
  auto n = normalize_minmax(Tensor::constant({2}, {1.0, 3.0}));
  CHECK_FALSE(n.degenerate);
  CHECK(to_vector(n.map) == std::vector<double>{0.0, 1.0});
  n = normalize_minmax(Tensor::constant({3}, {0.0, 5.0, 10.0}));
  CHECK(to_vector(n.map) == std::vector<double>{0.0, 0.5, 1.0});
  n = normalize_minmax(Tensor::constant({3}, {2.0, 2.0, 2.0}));
  CHECK(n.degenerate);
  CHECK(to_vector(n.map) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("normalize_minmax is idempotent and holds min and max constant") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const auto raw = random_constant({5, 5}, rng, 0.0, 3.0);
    const auto once = normalize_minmax(raw).map;
    const auto twice = normalize_minmax(once).map;
    CHECK(rel_err(to_vector(twice), to_vector(once)) <= 1e-15);
    for (double v : once.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // The derivative includes the dependence of min and max on the input.
  auto raw = Tensor::parameter({4}, {1.0, 2.0, 5.0, 3.5});
  Rng r(60);
  const auto weights = random_constant({4}, r);
  auto f = [&] { return sum(mul(normalize_minmax(raw).map, weights)); };
  const auto numeric = testing::fd_gradient(
      [&] {
        NoGradGuard g;
        return f().item();
      },
      raw);
  CHECK(rel_err(testing::analytic_gradient(f(), raw), numeric) <= 1e-8);
}

TEST_CASE("threshold_topk examples") {
  auto t = threshold_topk(Tensor::constant({4}, {0.1, 0.4, 0.6, 0.9}), 50);
  CHECK(t.threshold == 0.6);
  CHECK(t.binary == std::vector<std::uint8_t>{0, 0, 1, 1});
  t = threshold_topk(Tensor::constant({4}, {0.5, 0.5, 0.5, 0.9}), 50);
  CHECK(t.threshold == 0.5);
  CHECK(t.binary == std::vector<std::uint8_t>{1, 1, 1, 1});
  t = threshold_topk(Tensor::zeros({4}), 50);
  CHECK(t.binary == std::vector<std::uint8_t>{0, 0, 0, 0});
  t = threshold_topk(Tensor::constant({4}, {0.0, 0.0, 0.0, 1.0}), 50);
  CHECK(t.threshold == 0.0);
  CHECK(t.binary == std::vector<std::uint8_t>{0, 0, 0, 1});
  CHECK_THROWS_AS(threshold_topk(Tensor::zeros({4}), 0.0), InvalidParameter);
  CHECK_THROWS_AS(threshold_topk(Tensor::zeros({4}), 100.5), InvalidParameter);
  CHECK_THROWS_AS(threshold_topk(Tensor::zeros({0}), 50), InvalidShape);
}

TEST_CASE("threshold_topk against a sort-based oracle") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.below(40);
    const double k = 1.0 + rng.below(100);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.bernoulli(0.3) ? 0.0 : std::round(rng.uniform() * 8) / 8;
    const auto t = threshold_topk(Tensor::constant({n}, v), k);
    const auto m = static_cast<std::size_t>(std::ceil(k * n / 100.0));
    const double theta = sorted_desc(v)[m - 1];
    CHECK(t.threshold == theta);
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool keep = v[j] >= theta && v[j] > 0.0;
      CHECK(t.binary[j] == (keep ? 1 : 0));
      CHECK(t.masked_soft.at(j) == (keep ? v[j] : 0.0));
      count += keep;
    }
    CHECK(count <= n);
  }
}

TEST_CASE("distinct positive values keep exactly ceil(k N / 100) pixels") {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 10 + rng.below(200);
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = (j + 1.0) / n;
    rng.shuffle(v);
    const double k = 1.0 + rng.below(100);
    const auto t = threshold_topk(Tensor::constant({n}, v), k);
    const auto count = std::accumulate(t.binary.begin(), t.binary.end(), std::size_t{0});
    CHECK(count == static_cast<std::size_t>(std::ceil(k * n / 100.0)));
  }
}

TEST_CASE("masked_soft treats the indicator as a constant") {
  auto v = Tensor::parameter({4}, {0.1, 0.4, 0.6, 0.9});
  const auto t = threshold_topk(v, 50);
  CHECK(testing::analytic_gradient(sum(t.masked_soft), v) ==
        std::vector<double>{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("explain_sample matches a hand-composed oracle") {
  Rng rng(9);
  const std::size_t c = 3, h = 4, w = 4;
  auto a = random_parameter({2, c, h, w}, rng, 0.0, 1.0);
  const LinearHead head{random_constant({2, c}, rng), random_constant({2}, rng)};
  const auto trace = make_trace(a, head);

  for (std::size_t index : {0, 1}) {
    const auto map = explain_sample(trace, index, ScoreKind::kLogitAlg, false);
    std::vector<double> raw(h * w, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double alpha = (head.w.at(c + ch) - head.w.at(ch)) / double(h * w);
      for (std::size_t p = 0; p < h * w; ++p) raw[p] += alpha * a.at((index * c + ch) * h * w + p);
    }
    for (auto& r : raw) r = std::max(r, 0.0);
    CHECK(rel_err(to_vector(map.raw), raw) <= 1e-13);
    const double lo = *std::min_element(raw.begin(), raw.end());
    const double hi = *std::max_element(raw.begin(), raw.end());
    REQUIRE(hi > lo);
    std::vector<double> norm(raw.size());
    for (std::size_t p = 0; p < raw.size(); ++p) norm[p] = (raw[p] - lo) / (hi - lo);
    CHECK(rel_err(to_vector(map.normalized), norm) <= 1e-13);
    const double theta = sorted_desc(norm)[7];
    for (std::size_t p = 0; p < norm.size(); ++p) {
      CHECK(map.binary[p] == ((norm[p] >= theta && norm[p] > 0) ? 1 : 0));
    }
    CHECK(map.height == h);
    CHECK(map.width == w);
    CHECK_FALSE(map.raw.requires_grad());
  }
}

TEST_CASE("pure_bce evaluation saliency uses the algebraic logit score") {
  Rng rng(10);
  auto a = random_parameter({1, 3, 4, 4}, rng, 0.0, 1.0);
  const LinearHead head{random_constant({2, 3}, rng), random_constant({2}, rng)};
  const auto trace = make_trace(a, head);
  CHECK(evaluation_score_kind(ScoreKind::kPureBce) == ScoreKind::kLogitAlg);
  CHECK(evaluation_score_kind(ScoreKind::kProbAbs) == ScoreKind::kProbAbs);
  const auto base = explain_sample(trace, 0, ScoreKind::kPureBce, false);
  const auto alg = explain_sample(trace, 0, ScoreKind::kLogitAlg, false);
  CHECK(to_vector(base.raw) == to_vector(alg.raw));
  CHECK_THROWS_AS(explain_sample(trace, 0, ScoreKind::kPureBce, true), ContractError);
  CHECK_THROWS_AS(explain_sample(trace, 1, ScoreKind::kLogitAlg, false), InvalidShape);
}

TEST_CASE("degenerate and deterministic saliency") {
  Rng rng(11);
  auto a = random_parameter({1, 2, 4, 4}, rng, 0.0, 1.0);
  const LinearHead equal{Tensor::constant({2, 2}, {0.3, -0.2, 0.3, -0.2}),
                         Tensor::constant({2}, {0.0, 0.0})};
  const auto map = explain_sample(make_trace(a, equal), 0, ScoreKind::kLogitAlg, true);
  CHECK(map.degenerate);
  CHECK(map.salient_count() == 0);

  const LinearHead head{random_constant({2, 2}, rng), random_constant({2}, rng)};
  const auto trace = make_trace(a, head);
  const auto m1 = explain_sample(trace, 0, ScoreKind::kProbSqr, false);
  const auto m2 = explain_sample(trace, 0, ScoreKind::kProbSqr, false);
  CHECK(to_vector(m1.normalized) == to_vector(m2.normalized));
  CHECK(m1.binary == m2.binary);
}

TEST_CASE("training saliency stays differentiable") {
  Rng rng(12);
  auto a = random_parameter({1, 3, 4, 4}, rng, 0.0, 1.0);
  auto w = random_parameter({2, 3}, rng);
  const LinearHead head{w, Tensor::constant({2}, {0.0, 0.0})};
  const auto trace = make_trace(a, head);
  const auto full = explain_sample(trace, 0, ScoreKind::kLogitSqr, true);
  CHECK(full.masked_soft.requires_grad());
  const auto g = backward(sum(full.masked_soft), {w, a});
  CHECK(g.connected(w));
  CHECK(g.connected(a));

  const auto stopped = explain_sample(trace, 0, ScoreKind::kLogitSqr, true, {50.0, true});
  const auto gs = backward(sum(stopped.masked_soft), {w, a});
  CHECK_FALSE(gs.connected(w));
  CHECK(gs.connected(a));
}
