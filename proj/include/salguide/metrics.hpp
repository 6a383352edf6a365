#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "salguide/annotations.hpp"

namespace salguide {

inline constexpr double kDefaultCoverageTau = 0.01;

// sum(binary * mask) / sum(binary); nullopt when nothing is salient.
std::optional<double> top_saliency_precision(std::span<const std::uint8_t> binary,
                                             const Mask& mask);

// sum(normalized * mask) / sum(normalized); nullopt when the map is all zero.
std::optional<double> all_saliency_precision(std::span<const double> normalized,
                                             const Mask& mask);

struct CoverageCount {
  std::size_t covered = 0;
  std::size_t total = 0;

  CoverageCount& operator+=(const CoverageCount& o) {
    covered += o.covered;
    total += o.total;
    return *this;
  }
};

// A grid box is covered when its salient-pixel density reaches tau.
CoverageCount annotation_coverage(std::span<const std::uint8_t> binary,
                                  std::size_t height, std::size_t width,
                                  std::span<const BBox> grid_boxes,
                                  double tau = kDefaultCoverageTau);

struct MetricsRecord {
  double accuracy = 0.0;
  double coverage = 0.0;
  std::optional<double> top_precision;  // nullopt when every sample was skipped
  std::optional<double> all_precision;
  std::size_t n_samples = 0;
  std::size_t n_boxes = 0;
  std::size_t n_degenerate = 0;
};

struct BoxplotStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Quartiles interpolate linearly between closest ranks: position q*(n-1) in
// the sorted values.
BoxplotStats boxplot_stats(std::span<const double> values);

}  // namespace salguide
