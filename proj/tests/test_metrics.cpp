#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "salguide/error.hpp"
#include "salguide/explain.hpp"
#include "salguide/metrics.hpp"
#include "salguide/objective.hpp"
#include "support.hpp"

using namespace salguide;

namespace {

Mask grid_mask(const std::vector<BBox>& boxes, std::size_t side) {
  return rasterize_union(boxes, side, side);
}

}  // namespace

TEST_CASE("top saliency precision examples") {
  const auto m = grid_mask({{0, 0, 1, 1}}, 4);
  std::vector<std::uint8_t> b(16, 0);
  b[0] = b[1] = 1;
  CHECK(top_saliency_precision(b, m) == 1.0);
  std::vector<std::uint8_t> out(16, 0);
  out[15] = out[14] = 1;
  CHECK(top_saliency_precision(out, m) == 0.0);
  auto three = b;
  three[4] = 1;
  three[15] = 1;
  CHECK(top_saliency_precision(three, m) == 0.75);
  CHECK_FALSE(top_saliency_precision(std::vector<std::uint8_t>(16, 0), m).has_value());
  CHECK_THROWS_AS(top_saliency_precision(std::vector<std::uint8_t>(9, 0), m), InvalidShape);
}

TEST_CASE("all saliency precision examples") {
  const auto quarter = grid_mask({{0, 0, 1, 1}}, 4);
  CHECK(all_saliency_precision(std::vector<double>(16, 0.7), quarter) == doctest::Approx(0.25));
  std::vector<double> inside(16, 0.0);
  inside[0] = 0.3;
  inside[5] = 1.0;
  CHECK(all_saliency_precision(inside, quarter) == 1.0);
  std::vector<double> split(16, 0.0);
  split[0] = 0.8;
  split[15] = 0.2;
  CHECK(all_saliency_precision(split, quarter) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_FALSE(all_saliency_precision(std::vector<double>(16, 0.0), quarter).has_value());
  CHECK_THROWS_AS(all_saliency_precision(std::vector<double>(4, 1.0), quarter), InvalidShape);
}

TEST_CASE("annotation coverage examples") {
  std::vector<std::uint8_t> b(256, 0);
  const std::vector<BBox> whole{{0, 0, 15, 15}};
  CHECK(annotation_coverage(b, 16, 16, whole).covered == 0);
  CHECK(annotation_coverage(b, 16, 16, whole).total == 1);
  b[0] = b[100] = b[255] = 1;
  // 3 / 256 = 0.0117 reaches the 0.01 threshold.
  CHECK(annotation_coverage(b, 16, 16, whole).covered == 1);
  b[255] = b[100] = 0;
  CHECK(annotation_coverage(b, 16, 16, whole).covered == 0);

  std::vector<std::uint8_t> full(256, 1);
  const std::vector<BBox> two{{0, 0, 3, 3}, {8, 8, 9, 9}};
  const auto c = annotation_coverage(full, 16, 16, two);
  CHECK(c.covered == 2);
  CHECK(c.total == 2);

  const std::vector<BBox> empty_box{{5, 5, 4, 5}};
  CHECK_THROWS_AS(annotation_coverage(full, 16, 16, empty_box), InvalidParameter);
  const std::vector<BBox> outside{{0, 0, 16, 3}};
  CHECK_THROWS_AS(annotation_coverage(full, 16, 16, outside), InvalidParameter);
  CHECK_THROWS_AS(annotation_coverage(full, 8, 8, two), InvalidShape);
}

TEST_CASE("metrics match naive double-loop oracles on random 8x8 pairs") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto map = testing::random_map(rng, 64);
    std::vector<BBox> boxes;
    const auto n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) boxes.push_back(testing::random_grid_box(rng, 8));
    const auto mask = grid_mask(boxes, 8);
    const auto top = threshold_topk(Tensor::constant({8, 8}, map), 50);
    CHECK(top.binary == testing::naive_topk(map, 50));

    const auto tp = top_saliency_precision(top.binary, mask);
    const auto tp_oracle = testing::naive_top_precision(top.binary, mask.cells, 8, 8);
    REQUIRE(tp.has_value() == tp_oracle.has_value());
    if (tp) CHECK(std::abs(*tp - *tp_oracle) <= 1e-12);

    const auto ap = all_saliency_precision(map, mask);
    const auto ap_oracle = testing::naive_all_precision(map, mask.cells, 8, 8);
    REQUIRE(ap.has_value() == ap_oracle.has_value());
    if (ap) CHECK(std::abs(*ap - *ap_oracle) <= 1e-12);

    const double tau = rng.uniform(0.0, 0.5);
    const auto cov = annotation_coverage(top.binary, 8, 8, boxes, tau);
    CHECK(cov.total == boxes.size());
    CHECK(cov.covered == testing::naive_covered(top.binary, 8, boxes, tau));

    // Top precision is one minus the hard explanation loss.
    SaliencyMap s;
    s.height = s.width = 8;
    s.normalized = Tensor::constant({8, 8}, map);
    s.binary = top.binary;
    s.masked_soft = top.masked_soft;
    const auto hard = explanation_loss(s, mask, ExplanationMode::kHard);
    if (tp) CHECK(1.0 - *tp == hard.value.item());
  }
}

TEST_CASE("precisions are monotone in the mask and coverage in salient pixels") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto map = testing::random_map(rng, 64);
    const auto top = threshold_topk(Tensor::constant({8, 8}, map), 50);
    std::vector<BBox> boxes{testing::random_grid_box(rng, 8)};
    const auto small = grid_mask(boxes, 8);
    boxes.push_back(testing::random_grid_box(rng, 8));
    const auto large = grid_mask(boxes, 8);
    CHECK(*top_saliency_precision(top.binary, large) >= *top_saliency_precision(top.binary, small));
    CHECK(*all_saliency_precision(map, large) >= *all_saliency_precision(map, small));

    auto more = top.binary;
    const auto& b = boxes[0];
    more[static_cast<std::size_t>(b.y0) * 8 + b.x0] = 1;
    const std::vector<BBox> one{b};
    CHECK(annotation_coverage(more, 8, 8, one, 0.3).covered >=
          annotation_coverage(top.binary, 8, 8, one, 0.3).covered);
  }
}

TEST_CASE("boxplot stats") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = boxplot_stats(v);
  CHECK(s.median == 2.5);
  CHECK(s.mean == 2.5);
  CHECK(s.min == 1);
  CHECK(s.max == 4);
  CHECK(s.q1 == 1.75);
  CHECK(s.q3 == 3.25);

  const std::vector<double> single{0.42};
  const auto one = boxplot_stats(single);
  for (double f : {one.min, one.q1, one.median, one.q3, one.max, one.mean}) CHECK(f == 0.42);

  Rng rng(3);
  auto values = testing::random_values(37, rng, -2, 5);
  const auto base = boxplot_stats(values);
  CHECK(base.min <= base.q1);
  CHECK(base.q1 <= base.median);
  CHECK(base.median <= base.q3);
  CHECK(base.q3 <= base.max);
  std::reverse(values.begin(), values.end());
  rng.shuffle(values);
  const auto shuffled = boxplot_stats(values);
  CHECK(shuffled.q1 == base.q1);
  CHECK(shuffled.median == base.median);
  CHECK(shuffled.q3 == base.q3);
  CHECK(shuffled.min == base.min);
  CHECK(shuffled.max == base.max);

  CHECK_THROWS_AS(boxplot_stats(std::vector<double>{}), InvalidParameter);
}
