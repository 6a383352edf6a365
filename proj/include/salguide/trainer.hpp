#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "salguide/autograd.hpp"
#include "salguide/explain.hpp"
#include "salguide/metrics.hpp"
#include "salguide/model.hpp"
#include "salguide/scores.hpp"
#include "salguide/synthdata.hpp"

namespace salguide {

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 2e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 12;
  double alpha = 0.25;
  ScoreKind score_kind = ScoreKind::kPureBce;
  double k_percent = kDefaultTopKPercent;
  std::uint64_t seed = 1;
  bool stop_weights = false;
  // Leading epochs trained on bce alone before the explanation term starts.
  std::size_t warmup_epochs = 0;

  void validate() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update with coupled L2 decay (g += wd * theta).
// Moments are allocated on the first call.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               AdamState& state, double learning_rate, double weight_decay);
void adam_step(std::span<Tensor> params, const GradientMap& grads,
               AdamState& state, double learning_rate, double weight_decay);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double bce = 0.0;
  double exp_weighted = 0.0;  // alpha * explanation loss
  double total = 0.0;
  double val_accuracy = 0.0;
  std::size_t n_explained = 0;
  std::size_t n_skipped = 0;
};

using EpochHistory = std::vector<EpochRecord>;

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::optional<std::filesystem::path> checkpoint;
};

// Random streams of a run, derived from TrainConfig::seed.
enum class SeedStream : std::uint64_t { kInit = 0, kShuffle = 1, kDropout = 2 };
std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream);

// Fresh model for a run: Model::init from the run's init stream.
Model init_for_run(const ModelConfig& config, std::uint64_t seed);

// Trains on the samples whose split is "train" and records validation
// accuracy on "val" after every epoch. Throws NumericError naming the batch
// when the loss stops being finite.
EpochHistory train(Model& model, const std::vector<Sample>& dataset,
                   const TrainConfig& config, const TrainHooks& hooks = {});

// Argmax class per sample in evaluation mode.
std::vector<int> predict(const Model& model, const std::vector<Sample>& samples,
                         std::size_t batch_size = 12);

double accuracy(const Model& model, const std::vector<Sample>& samples,
                std::size_t batch_size = 12);

struct EvalOptions {
  double k_percent = kDefaultTopKPercent;
  double coverage_tau = kDefaultCoverageTau;
  std::size_t batch_size = 12;
};

// Accuracy over every sample; explanation metrics over positive samples that
// carry boxes, using evaluation-mode saliency.
MetricsRecord evaluate(const Model& model, const std::vector<Sample>& samples,
                       ScoreKind kind, const EvalOptions& options = {});

}  // namespace salguide
