#include "salguide/annotations.hpp"

#include <algorithm>
#include <string>

#include "salguide/error.hpp"

namespace salguide {

void BBox::validate(int width, int height) const {
  if (!(0 <= x0 && x0 <= x1 && x1 < width && 0 <= y0 && y0 <= y1 && y1 < height)) {
    throw InvalidParameter("box (" + std::to_string(x0) + "," + std::to_string(y0) +
                           "," + std::to_string(x1) + "," + std::to_string(y1) +
                           ") outside " + std::to_string(width) + "x" +
                           std::to_string(height) + " image");
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

BBox box_to_grid(const BBox& box, std::size_t image_size,
                 std::size_t saliency_size) {
  if (saliency_size == 0 || image_size % saliency_size != 0) {
    throw InvalidParameter("image size " + std::to_string(image_size) +
                           " is not a multiple of saliency size " +
                           std::to_string(saliency_size));
  }
  const int size = static_cast<int>(image_size);
  box.validate(size, size);
  const int f = static_cast<int>(image_size / saliency_size);
  return {box.x0 / f, box.y0 / f, box.x1 / f, box.y1 / f};
}

std::vector<BBox> boxes_to_grid(std::span<const BBox> boxes,
                                std::size_t image_size,
                                std::size_t saliency_size) {
  std::vector<BBox> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(box_to_grid(b, image_size, saliency_size));
  return out;
}

Mask rasterize_union(std::span<const BBox> boxes, std::size_t image_size,
                     std::size_t saliency_size) {
  Mask mask;
  mask.height = saliency_size;
  mask.width = saliency_size;
  mask.cells.assign(saliency_size * saliency_size, 0);
  mask.source_box_count = boxes.size();
  for (const auto& box : boxes) {
    const auto g = box_to_grid(box, image_size, saliency_size);
    for (int y = g.y0; y <= g.y1; ++y)
      for (int x = g.x0; x <= g.x1; ++x)
        mask.cells[static_cast<std::size_t>(y) * saliency_size + static_cast<std::size_t>(x)] = 1;
  }
  return mask;
}

}  // namespace salguide
