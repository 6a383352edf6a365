#include "salguide/heatmap_export.hpp"

#include "salguide/error.hpp"
#include "salguide/explain.hpp"
#include "salguide/ops.hpp"

namespace salguide {

namespace fs = std::filesystem;

std::vector<fs::path> export_heatmaps(const Model& model,
                                      const std::vector<Sample>& samples,
                                      ScoreKind kind, std::size_t count,
                                      const fs::path& out_dir, double k_percent) {
  if (count > samples.size()) {
    throw InvalidParameter("requested " + std::to_string(count) +
                           " heatmaps from a split of " + std::to_string(samples.size()));
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t image = model.config().input_size;
  const std::size_t grid = model.config().saliency_size();
  Rng unused(0);
  std::vector<fs::path> written;
  std::size_t done = 0;
  for (std::size_t i = 0; i < samples.size() && done < count; ++i) {
    const auto& smp = samples[i];
    if (smp.label != 1 || smp.boxes.empty()) continue;
    const std::size_t one[] = {i};
    const auto trace = model.forward(make_batch(samples, one), false, unused);
    const auto sal = explain_sample(trace, 0, kind, false, {k_percent, false});

    auto heat = quantize(sal.normalized.values(), sal.width, sal.height);
    auto outlined = heat;
    for (const auto& b : boxes_to_grid(smp.boxes, image, grid)) {
      for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x) {
          if (y == b.y0 || y == b.y1 || x == b.x0 || x == b.x1) {
            outlined.pixels[static_cast<std::size_t>(y) * sal.width +
                            static_cast<std::size_t>(x)] = 255;
          }
        }
    }
    const auto stem = fs::path(smp.filename).stem().string();
    written.push_back(out_dir / (stem + "_heatmap.pgm"));
    pgm_write(written.back(), heat);
    written.push_back(out_dir / (stem + "_boxes.pgm"));
    pgm_write(written.back(), outlined);
    ++done;
  }
  return written;
}

}  // namespace salguide
