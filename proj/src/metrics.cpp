#include "salguide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "salguide/error.hpp"

namespace salguide {

namespace {

void require_grid(std::size_t n, const Mask& mask, const char* op) {
  if (n != mask.cells.size()) {
    throw InvalidShape(std::string(op) + ": map of " + std::to_string(n) +
                       " cells vs mask of " + std::to_string(mask.cells.size()));
  }
}

}  // namespace

std::optional<double> top_saliency_precision(std::span<const std::uint8_t> binary,
                                             const Mask& mask) {
  require_grid(binary.size(), mask, "top_saliency_precision");
  std::size_t salient = 0, inside = 0;
  for (std::size_t i = 0; i < binary.size(); ++i) {
    if (!binary[i]) continue;
    ++salient;
    if (mask.cells[i]) ++inside;
  }
  if (salient == 0) return std::nullopt;
  return static_cast<double>(inside) / static_cast<double>(salient);
}

std::optional<double> all_saliency_precision(std::span<const double> normalized,
                                             const Mask& mask) {
  require_grid(normalized.size(), mask, "all_saliency_precision");
  double total = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    total += normalized[i];
    if (mask.cells[i]) inside += normalized[i];
  }
  if (!(total > 0.0)) return std::nullopt;
  return inside / total;
}

CoverageCount annotation_coverage(std::span<const std::uint8_t> binary,
                                  std::size_t height, std::size_t width,
                                  std::span<const BBox> grid_boxes, double tau) {
  if (binary.size() != height * width) {
    throw InvalidShape("annotation_coverage: map size does not match grid");
  }
  CoverageCount out;
  for (const auto& box : grid_boxes) {
    box.validate(static_cast<int>(width), static_cast<int>(height));
    std::size_t salient = 0;
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x)
        salient += binary[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] ? 1 : 0;
    ++out.total;
    if (static_cast<double>(salient) / static_cast<double>(box.area()) >= tau) {
      ++out.covered;
    }
  }
  return out;
}

BoxplotStats boxplot_stats(std::span<const double> values) {
  if (values.empty()) throw InvalidParameter("boxplot_stats of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  BoxplotStats s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(sorted.size());
  return s;
}

}  // namespace salguide
