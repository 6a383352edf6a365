#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "salguide/model.hpp"
#include "salguide/scores.hpp"
#include "salguide/synthdata.hpp"

namespace salguide {

// For the first `count` positive annotated samples, writes the normalized
// Grad-CAM map as <stem>_heatmap.pgm and the same map with the grid box
// outlines burned in at 255 as <stem>_boxes.pgm. Returns the written paths.
std::vector<std::filesystem::path> export_heatmaps(
    const Model& model, const std::vector<Sample>& samples, ScoreKind kind,
    std::size_t count, const std::filesystem::path& out_dir,
    double k_percent = 50.0);

}  // namespace salguide
