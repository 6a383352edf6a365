#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace salguide {

// Axis-aligned box with inclusive pixel coordinates.
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::size_t area() const { return static_cast<std::size_t>(width()) * height(); }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool intersects(const BBox& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  // Throws InvalidParameter unless 0 <= x0 <= x1 < width, same for y.
  void validate(int width, int height) const;

  bool operator==(const BBox&) const = default;
};

// Binary grid at saliency resolution, row-major.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;
  std::size_t source_box_count = 0;

  std::uint8_t at(std::size_t y, std::size_t x) const { return cells[y * width + x]; }
  std::size_t count() const;
};

// Maps an image-space box onto the saliency grid with scale
// f = image_size / saliency_size; both corners are floored, so any partially
// covered cell counts as inside.
BBox box_to_grid(const BBox& box, std::size_t image_size,
                 std::size_t saliency_size);

std::vector<BBox> boxes_to_grid(std::span<const BBox> boxes,
                                std::size_t image_size,
                                std::size_t saliency_size);

// Union of the grid rectangles of all boxes; all-zero for an empty list.
Mask rasterize_union(std::span<const BBox> boxes, std::size_t image_size,
                     std::size_t saliency_size);

}  // namespace salguide
