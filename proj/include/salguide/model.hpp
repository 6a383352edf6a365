#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "salguide/rng.hpp"
#include "salguide/tensor.hpp"

namespace salguide {

// Conv stages of `kernel`x`kernel` same-padded convolutions with ReLU, a 2x2
// max-pool between consecutive stages, global average pooling, dropout and a
// two-way linear head.
struct ModelConfig {
  std::size_t input_size = 64;
  std::vector<std::size_t> channels{8, 16, 16};
  std::size_t kernel = 3;
  double dropout_p = 0.3;
  std::size_t num_classes = 2;

  // Throws InvalidParameter.
  void validate() const;
  std::size_t downsampling() const;
  std::size_t saliency_size() const { return input_size / downsampling(); }

  bool operator==(const ModelConfig&) const = default;
};

struct ForwardTrace {
  Tensor logits;       // [n, 2]
  Tensor activations;  // [n, c, hs, ws], the tensor fed to global pooling
  std::size_t saliency_h = 0;
  std::size_t saliency_w = 0;

  std::size_t batch() const { return logits.dim(0); }
};

class Model {
 public:
  // Fan-in scaled uniform weights, zero biases.
  static Model init(const ModelConfig& config, Rng& rng);

  // `batch` is [n, 1, s, s] with s == config().input_size.
  ForwardTrace forward(const Tensor& batch, bool training, Rng& rng) const;

  const ModelConfig& config() const { return config_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<Tensor>& parameters() { return params_; }
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  // Shapes every parameter must have under `config`, in storage order.
  static std::vector<Shape> parameter_shapes(const ModelConfig& config);

 private:
  Model(ModelConfig config, std::vector<Tensor> params)
      : config_(std::move(config)), params_(std::move(params)) {}

  ModelConfig config_;
  // conv kernels and biases per stage, then head weight and bias
  std::vector<Tensor> params_;

  friend Model load_checkpoint(const std::filesystem::path& path);
};

// Binary checkpoint: "SALG1", the config, then for each parameter its rank,
// dims and raw float64 values, all little-endian.
void save_checkpoint(const Model& model, const std::filesystem::path& path);

// Throws CorruptCheckpoint on bad magic, truncation or inconsistent shapes.
Model load_checkpoint(const std::filesystem::path& path);

// Loads into an existing model; throws InvalidShape when the stored config
// differs from the model's.
void load_checkpoint_into(Model& model, const std::filesystem::path& path);

}  // namespace salguide
