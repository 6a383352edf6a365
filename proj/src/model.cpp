#include "salguide/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "salguide/error.hpp"
#include "salguide/ops.hpp"

namespace salguide {

void ModelConfig::validate() const {
  if (channels.empty()) throw InvalidParameter("model needs at least one stage");
  for (auto c : channels) {
    if (c == 0) throw InvalidParameter("channel counts must be >= 1");
  }
  if (kernel == 0 || kernel % 2 == 0) {
    throw InvalidParameter("kernel size must be odd and positive");
  }
  if (num_classes != 2) throw InvalidParameter("num_classes is fixed at 2");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw InvalidParameter("dropout_p must lie in [0, 1)");
  }
  if (channels.size() > 16) throw InvalidParameter("too many stages");
  if (input_size == 0 || input_size % downsampling() != 0) {
    throw InvalidParameter("input_size " + std::to_string(input_size) +
                           " must be divisible by " +
                           std::to_string(downsampling()));
  }
}

std::size_t ModelConfig::downsampling() const {
  return channels.empty() ? 1 : std::size_t{1} << (channels.size() - 1);
}

std::vector<Shape> Model::parameter_shapes(const ModelConfig& config) {
  std::vector<Shape> shapes;
  std::size_t in = 1;
  for (auto out : config.channels) {
    shapes.push_back({out, in, config.kernel, config.kernel});
    shapes.push_back({out});
    in = out;
  }
  shapes.push_back({config.num_classes, in});
  shapes.push_back({config.num_classes});
  return shapes;
}

Model Model::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  std::vector<Tensor> params;
  for (const auto& shape : parameter_shapes(config)) {
    std::vector<double> values(shape_numel(shape), 0.0);
    if (shape.size() > 1) {
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
      // He-uniform for the ReLU stages, plain 1/sqrt(fan_in) for the head.
      const double bound = shape.size() == 4
                               ? std::sqrt(6.0 / static_cast<double>(fan_in))
                               : 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : values) v = rng.uniform(-bound, bound);
    }
    params.push_back(Tensor::parameter(shape, std::move(values)));
  }
  return Model(config, std::move(params));
}

ForwardTrace Model::forward(const Tensor& batch, bool training, Rng& rng) const {
  const auto s = config_.input_size;
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != s ||
      batch.dim(3) != s) {
    throw InvalidShape("model expects input [n,1," + std::to_string(s) + "," +
                       std::to_string(s) + "], got " + shape_str(batch.shape()));
  }
  const Conv2dParams same{1, config_.kernel / 2};
  Tensor x = batch;
  const std::size_t stages = config_.channels.size();
  for (std::size_t i = 0; i < stages; ++i) {
    x = relu(conv2d(x, params_[2 * i], params_[2 * i + 1], same));
    if (i + 1 < stages) x = max_pool2d(x);
  }
  ForwardTrace trace;
  trace.activations = x;
  trace.saliency_h = x.dim(2);
  trace.saliency_w = x.dim(3);
  auto pooled = global_avg_pool(x);
  pooled = dropout(pooled, config_.dropout_p, training, rng);
  trace.logits = linear(pooled, params_[2 * stages], params_[2 * stages + 1]);
  return trace;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    names.push_back("conv" + std::to_string(i + 1) + ".weight");
    names.push_back("conv" + std::to_string(i + 1) + ".bias");
  }
  names.push_back("head.weight");
  names.push_back("head.bias");
  return names;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

namespace {

constexpr char kMagic[] = {'S', 'A', 'L', 'G', '1'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return std::bit_cast<double>(bits);
  }
  bool match(const char* data, std::size_t n) {
    if (bytes_.size() - pos_ < n) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (bytes_[pos_ + i] != data[i]) return false;
    }
    pos_ += n;
    return true;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CorruptCheckpoint("checkpoint is truncated");
  }
  std::uint8_t byte() { return static_cast<std::uint8_t>(bytes_[pos_++]); }

  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

struct Stored {
  ModelConfig config;
  std::vector<Tensor> params;
};

Stored read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (!r.match(kMagic, sizeof kMagic)) {
    throw CorruptCheckpoint("bad checkpoint magic in " + path.string());
  }
  Stored out;
  out.config.input_size = r.u32();
  out.config.kernel = r.u32();
  const auto stages = r.u32();
  if (stages == 0 || stages > 16) throw CorruptCheckpoint("bad stage count");
  out.config.channels.resize(stages);
  for (auto& c : out.config.channels) c = r.u32();
  out.config.dropout_p = r.f64();
  out.config.num_classes = r.u32();
  try {
    out.config.validate();
  } catch (const InvalidParameter& e) {
    throw CorruptCheckpoint(std::string("checkpoint config invalid: ") + e.what());
  }
  const auto expected = Model::parameter_shapes(out.config);
  const auto count = r.u32();
  if (count != expected.size()) throw CorruptCheckpoint("parameter count mismatch");
  for (const auto& want : expected) {
    const auto rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != want) {
      throw CorruptCheckpoint("stored parameter shape " + shape_str(shape) +
                              " inconsistent with config (" + shape_str(want) + ")");
    }
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = r.f64();
    out.params.push_back(Tensor::parameter(shape, std::move(values)));
  }
  if (!r.at_end()) throw CorruptCheckpoint("trailing bytes in checkpoint");
  return out;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  Writer w;
  const auto& c = model.config();
  w.raw(kMagic, sizeof kMagic);
  w.u32(static_cast<std::uint32_t>(c.input_size));
  w.u32(static_cast<std::uint32_t>(c.kernel));
  w.u32(static_cast<std::uint32_t>(c.channels.size()));
  for (auto ch : c.channels) w.u32(static_cast<std::uint32_t>(ch));
  w.f64(c.dropout_p);
  w.u32(static_cast<std::uint32_t>(c.num_classes));
  w.u32(static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    w.u32(static_cast<std::uint32_t>(p.rank()));
    for (auto d : p.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p.values()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  auto stored = read_checkpoint(path);
  return Model(std::move(stored.config), std::move(stored.params));
}

void load_checkpoint_into(Model& model, const std::filesystem::path& path) {
  auto stored = read_checkpoint(path);
  if (!(stored.config == model.config())) {
    throw InvalidShape("checkpoint " + path.string() +
                       " was written for a different model configuration");
  }
  for (std::size_t i = 0; i < stored.params.size(); ++i) {
    auto dst = model.parameters()[i].mutable_values();
    const auto src = stored.params[i].values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace salguide
