#include "salguide/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "salguide/csv.hpp"
#include "salguide/error.hpp"
#include "salguide/rng.hpp"

namespace salguide {

namespace fs = std::filesystem;

GrayImage pgm_read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  std::size_t pos = 0;
  const auto fail = [&](const std::string& what) -> void {
    throw ParseError(path.string() + ": " + what);
  };
  if (bytes.size() < 2 || bytes[0] != 'P') fail("not a PGM file");
  if (bytes[1] != '5') {
    throw UnsupportedFormat(path.string() + ": unsupported graymap variant P" +
                            std::string(1, bytes[1]) + " (need binary P5)");
  }
  pos = 2;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto number = [&]() -> std::size_t {
    skip_space();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 24)) fail("header value too large");
      ++pos;
    }
    if (pos == start) fail("malformed header");
    return v;
  };
  GrayImage img;
  img.width = number();
  img.height = number();
  const auto maxval = number();
  if (maxval != 255) {
    throw UnsupportedFormat(path.string() + ": maxval " + std::to_string(maxval) +
                            " unsupported (need 255)");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail("malformed header");
  }
  ++pos;
  const std::size_t n = img.width * img.height;
  if (bytes.size() - pos < n) fail("truncated pixel data");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

void pgm_write(const fs::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw InvalidShape("pgm_write: pixel count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

GrayImage quantize(std::span<const double> values, std::size_t width,
                   std::size_t height) {
  if (values.size() != width * height) {
    throw InvalidShape("quantize: value count does not match dimensions");
  }
  GrayImage img{width, height, std::vector<std::uint8_t>(values.size())};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

void SynthConfig::validate() const {
  const auto check = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter("synthetic config: " + what);
  };
  check(image_size >= 16, "image_size must be >= 16");
  check(n_samples >= 1, "n_samples must be >= 1");
  check(positive_fraction >= 0.0 && positive_fraction <= 1.0,
        "positive_fraction must lie in [0,1]");
  check(confounder_rate >= 0.0 && confounder_rate <= 1.0,
        "confounder_rate must lie in [0,1]");
  check(second_lesion_rate >= 0.0 && second_lesion_rate <= 1.0,
        "second_lesion_rate must lie in [0,1]");
  check(noise_std >= 0.0, "noise_std must be >= 0");
  check(lesion_sigma_min > 0.0 && lesion_sigma_min <= lesion_sigma_max,
        "lesion sigma range invalid");
  check(lesion_amplitude_min <= lesion_amplitude_max, "lesion amplitude range invalid");
  check(train_fraction >= 0.0 && val_fraction >= 0.0 && test_fraction >= 0.0,
        "split fractions must be non-negative");
  check(std::fabs(train_fraction + val_fraction + test_fraction - 1.0) < 1e-9,
        "split fractions must sum to 1");
  check(confounder_size >= 1, "confounder_size must be >= 1");
  // Room for at least one padded lesion box beside the exclusion zone.
  const auto zone = confounder_exclusion();
  const int reach = static_cast<int>(std::ceil(2.0 * lesion_sigma_max)) + 2;
  check(zone.x1 + 1 + 2 * reach + 1 <= static_cast<int>(image_size),
        "image too small for lesions and confounder tag");
}

BBox SynthConfig::confounder_region() const {
  const int s = static_cast<int>(confounder_size);
  return {2, 2, 2 + s - 1, 2 + s - 1};
}

BBox SynthConfig::confounder_exclusion() const {
  const int end = confounder_region().x1 + 4;
  return {0, 0, end, end};
}

namespace {

std::string image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.pgm", index);
  return buf;
}

// Assigns train/val/test to one label stratum.
void assign_splits(std::vector<std::size_t> members, const SynthConfig& config,
                   Rng& rng, std::vector<std::string>& split_of) {
  rng.shuffle(members);
  const double n = static_cast<double>(members.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * config.train_fraction));
  const auto n_val = std::min(members.size() - std::min(n_train, members.size()),
                              static_cast<std::size_t>(std::llround(n * config.val_fraction)));
  for (std::size_t i = 0; i < members.size(); ++i) {
    split_of[members[i]] = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
  }
}

}  // namespace

std::vector<GeneratedSample> generate_samples(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t n = config.n_samples;
  const std::size_t s = config.image_size;
  const auto n_pos =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * config.positive_fraction));

  std::vector<int> labels(n, 0);
  std::fill_n(labels.begin(), n_pos, 1);
  rng.shuffle(labels);

  std::vector<std::string> split_of(n);
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos_idx : neg_idx).push_back(i);
  assign_splits(pos_idx, config, rng, split_of);
  assign_splits(neg_idx, config, rng, split_of);

  const BBox exclusion = config.confounder_exclusion();
  const BBox tag = config.confounder_region();
  const int size = static_cast<int>(s);

  std::vector<GeneratedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    GeneratedSample g;
    Sample& smp = g.sample;
    smp.filename = image_name(i);
    smp.size = s;
    smp.label = labels[i];
    smp.split = split_of[i];
    std::vector<double> img(s * s);
    for (auto& v : img) v = config.background + config.noise_std * rng.normal();

    if (smp.label == 1) {
      const int lesions = rng.bernoulli(config.second_lesion_rate) ? 2 : 1;
      for (int l = 0; l < lesions; ++l) {
        const double sigma = rng.uniform(config.lesion_sigma_min, config.lesion_sigma_max);
        const double amp = rng.uniform(config.lesion_amplitude_min, config.lesion_amplitude_max);
        const int extent = static_cast<int>(std::ceil(2.0 * sigma));
        const int half = extent + 2;  // blob extent padded by 2 px
        BBox box;
        int cx = 0, cy = 0;
        do {
          cx = half + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2 * half)));
          cy = half + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2 * half)));
          box = {cx - half, cy - half, cx + half, cy + half};
        } while (box.intersects(exclusion));
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (int y = std::max(0, cy - 3 * extent); y <= std::min(size - 1, cy + 3 * extent); ++y)
          for (int x = std::max(0, cx - 3 * extent); x <= std::min(size - 1, cx + 3 * extent); ++x) {
            const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
            img[static_cast<std::size_t>(y) * s + static_cast<std::size_t>(x)] += amp * std::exp(-d2 * inv);
          }
        smp.boxes.push_back(box);
        g.lesion_centers.emplace_back(cx, cy);
      }
      if (rng.bernoulli(config.confounder_rate)) {
        g.confounded = true;
        for (int y = tag.y0; y <= tag.y1; ++y)
          for (int x = tag.x0; x <= tag.x1; ++x)
            img[static_cast<std::size_t>(y) * s + static_cast<std::size_t>(x)] = config.confounder_intensity;
      }
    }
    // Round-trip through 8 bits so in-memory samples equal loaded ones.
    const auto q = quantize(img, s, s);
    smp.image.resize(s * s);
    for (std::size_t p = 0; p < s * s; ++p) smp.image[p] = q.pixels[p] / 255.0;
    out.push_back(std::move(g));
  }
  return out;
}

DatasetManifest generate_dataset(const SynthConfig& config, const fs::path& out_dir) {
  const auto samples = generate_samples(config);
  std::error_code ec;
  if (!out_dir.parent_path().empty() && !fs::is_directory(out_dir.parent_path())) {
    throw IoError("parent directory of " + out_dir.string() + " does not exist");
  }
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  DatasetManifest m;
  CsvWriter labels(out_dir / "labels.csv", {"filename", "label", "split"});
  CsvWriter boxes(out_dir / "boxes.csv", {"filename", "x0", "y0", "x1", "y1"});
  for (const auto& g : samples) {
    const auto& smp = g.sample;
    pgm_write(out_dir / "images" / smp.filename, quantize(smp.image, smp.size, smp.size));
    labels.row({smp.filename, std::to_string(smp.label), smp.split});
    for (const auto& b : smp.boxes) {
      boxes.row({smp.filename, std::to_string(b.x0), std::to_string(b.y0),
                 std::to_string(b.x1), std::to_string(b.y1)});
    }
    ++m.n_samples;
    m.n_positive += static_cast<std::size_t>(smp.label);
    m.n_boxes += smp.boxes.size();
    m.n_confounded += g.confounded ? 1 : 0;
    if (smp.split == "train") ++m.n_train;
    else if (smp.split == "val") ++m.n_val;
    else ++m.n_test;
  }
  labels.close();
  boxes.close();
  return m;
}

bool is_valid_split(const std::string& split) {
  return split == "train" || split == "val" || split == "test" || split == "all";
}

std::vector<Sample> load_dataset(const fs::path& dir, const std::string& split) {
  if (!is_valid_split(split)) {
    throw InvalidParameter("unknown split '" + split + "' (expected train, val, test or all)");
  }
  const auto label_rows = read_csv(dir / "labels.csv", {"filename", "label", "split"});
  const auto box_rows = read_csv(dir / "boxes.csv", {"filename", "x0", "y0", "x1", "y1"});

  std::vector<Sample> all;
  std::map<std::string, std::size_t> by_name;
  for (const auto& row : label_rows) {
    const auto where = (dir / "labels.csv").string() + ":" + std::to_string(row.line);
    Sample smp;
    smp.filename = row.fields[0];
    if (row.fields[1] == "0" || row.fields[1] == "1") {
      smp.label = row.fields[1] == "1" ? 1 : 0;
    } else {
      throw ParseError(where + ": label must be 0 or 1");
    }
    smp.split = row.fields[2];
    if (smp.split != "train" && smp.split != "val" && smp.split != "test") {
      throw ParseError(where + ": unknown split '" + smp.split + "'");
    }
    if (!by_name.emplace(smp.filename, all.size()).second) {
      throw ParseError(where + ": duplicate filename " + smp.filename);
    }
    all.push_back(std::move(smp));
  }

  std::size_t image_size = 0;
  for (auto& smp : all) {
    if (split != "all" && smp.split != split) continue;
    const auto img = pgm_read(dir / "images" / smp.filename);
    if (img.width != img.height) throw ParseError(smp.filename + ": image must be square");
    if (image_size == 0) image_size = img.width;
    if (img.width != image_size) throw ParseError(smp.filename + ": inconsistent image size");
    smp.size = img.width;
    smp.image.resize(img.pixels.size());
    for (std::size_t p = 0; p < img.pixels.size(); ++p) smp.image[p] = img.pixels[p] / 255.0;
  }

  for (const auto& row : box_rows) {
    const auto where = (dir / "boxes.csv").string() + ":" + std::to_string(row.line);
    auto it = by_name.find(row.fields[0]);
    if (it == by_name.end()) throw ParseError(where + ": unknown filename " + row.fields[0]);
    auto& smp = all[it->second];
    BBox b;
    int* coords[] = {&b.x0, &b.y0, &b.x1, &b.y1};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& f = row.fields[k + 1];
      std::size_t used = 0;
      try {
        *coords[k] = std::stoi(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != f.size()) throw ParseError(where + ": bad coordinate '" + f + "'");
    }
    if (smp.label != 1) throw ParseError(where + ": box given for negative sample " + smp.filename);
    if (smp.size != 0) {
      try {
        b.validate(static_cast<int>(smp.size), static_cast<int>(smp.size));
      } catch (const InvalidParameter& e) {
        throw ParseError(where + ": " + e.what());
      }
    }
    smp.boxes.push_back(b);
  }

  std::vector<Sample> out;
  for (auto& smp : all) {
    if (split == "all" || smp.split == split) out.push_back(std::move(smp));
  }
  return out;
}

Tensor make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidParameter("make_batch: empty batch");
  const std::size_t s = samples[indices[0]].size;
  std::vector<double> values;
  values.reserve(indices.size() * s * s);
  for (auto i : indices) {
    const auto& smp = samples.at(i);
    if (smp.size != s) throw InvalidShape("make_batch: mixed image sizes");
    values.insert(values.end(), smp.image.begin(), smp.image.end());
  }
  return Tensor::constant({indices.size(), 1, s, s}, std::move(values));
}

}  // namespace salguide
