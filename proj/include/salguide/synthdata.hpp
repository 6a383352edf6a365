#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "salguide/annotations.hpp"
#include "salguide/tensor.hpp"

namespace salguide {

// 8-bit grayscale raster.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

// Binary PGM ("P5", maxval 255). Throws UnsupportedFormat for other variants.
GrayImage pgm_read(const std::filesystem::path& path);
void pgm_write(const std::filesystem::path& path, const GrayImage& image);
// Quantizes values in [0,1] to round(v * 255), clamping out-of-range input.
GrayImage quantize(std::span<const double> values, std::size_t width,
                   std::size_t height);

struct SynthConfig {
  std::size_t image_size = 64;
  std::size_t n_samples = 1200;
  double positive_fraction = 0.5;
  double background = 0.3;
  double noise_std = 0.08;
  double lesion_amplitude_min = 0.35;
  double lesion_amplitude_max = 0.6;
  double lesion_sigma_min = 2.0;
  double lesion_sigma_max = 3.5;
  double second_lesion_rate = 0.25;
  double confounder_rate = 0.9;
  std::size_t confounder_size = 6;
  double confounder_intensity = 1.0;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 1;

  void validate() const;
  // Pixel square holding the confounder tag.
  BBox confounder_region() const;
  // Zone lesion boxes must avoid; wider than the tag so the two stay apart at
  // saliency resolution too.
  BBox confounder_exclusion() const;
};

struct Sample {
  std::string filename;  // relative to the dataset's images/ directory
  std::size_t size = 0;
  std::vector<double> image;  // size*size values in [0,1]
  int label = 0;
  std::vector<BBox> boxes;
  std::string split;
};

// In-memory generation result with ground truth the files do not carry.
struct GeneratedSample {
  Sample sample;
  std::vector<std::pair<int, int>> lesion_centers;  // (x, y)
  bool confounded = false;
};

struct DatasetManifest {
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;
  std::size_t n_boxes = 0;
  std::size_t n_confounded = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
};

std::vector<GeneratedSample> generate_samples(const SynthConfig& config);

// Writes images/NNNN.pgm, labels.csv and boxes.csv under out_dir, creating
// out_dir itself but not its parents.
DatasetManifest generate_dataset(const SynthConfig& config,
                                 const std::filesystem::path& out_dir);

// split is one of train, val, test or all.
std::vector<Sample> load_dataset(const std::filesystem::path& dir,
                                 const std::string& split);

bool is_valid_split(const std::string& split);

// Stacks images into an [n,1,s,s] constant tensor.
Tensor make_batch(const std::vector<Sample>& samples,
                  std::span<const std::size_t> indices);

}  // namespace salguide
