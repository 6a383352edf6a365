#include "salguide/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "salguide/error.hpp"
#include "salguide/objective.hpp"
#include "salguide/ops.hpp"

namespace salguide {

void TrainConfig::validate() const {
  const auto check = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter("train config: " + what);
  };
  check(epochs >= 1, "epochs must be >= 1");
  check(learning_rate > 0.0, "learning_rate must be positive");
  check(weight_decay >= 0.0, "weight_decay must be non-negative");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(alpha >= 0.0, "alpha must be non-negative");
  check(k_percent > 0.0 && k_percent <= 100.0, "k_percent must lie in (0, 100]");
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               AdamState& state, double learning_rate, double weight_decay) {
  if (params.size() != grads.size()) {
    throw InvalidShape("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                       std::to_string(params.size()) + " parameters");
  }
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw InvalidShape("adam_step: optimizer state tracks a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape() ||
        state.first_moment[i].size() != params[i].numel()) {
      throw InvalidShape("adam_step: gradient " + shape_str(grads[i].shape()) +
                         " for parameter " + shape_str(params[i].shape()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_values();
    const auto g = grads[i].values();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g[j] + weight_decay * theta[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(std::span<Tensor> params, const GradientMap& grads,
               AdamState& state, double learning_rate, double weight_decay) {
  std::vector<Tensor> ordered;
  ordered.reserve(params.size());
  for (const auto& p : params) ordered.push_back(grads.at(p));
  adam_step(params, ordered, state, learning_rate, weight_decay);
}

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

Model init_for_run(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(stream_seed(seed, SeedStream::kInit));
  return Model::init(config, rng);
}

namespace {

std::vector<std::size_t> indices_of_split(const std::vector<Sample>& data,
                                          const std::string& split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = logits.at(2 * i + 1) > logits.at(2 * i) ? 1 : 0;
  }
  return out;
}

}  // namespace

std::vector<int> predict(const Model& model, const std::vector<Sample>& samples,
                         std::size_t batch_size) {
  NoGradGuard no_grad;
  Rng unused(0);
  std::vector<int> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      idx.push_back(i);
    }
    const auto trace = model.forward(make_batch(samples, idx), false, unused);
    const auto pred = argmax_rows(trace.logits);
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

double accuracy(const Model& model, const std::vector<Sample>& samples,
                std::size_t batch_size) {
  if (samples.empty()) throw InvalidParameter("accuracy of an empty split");
  const auto pred = predict(model, samples, batch_size);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    correct += pred[i] == samples[i].label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

EpochHistory train(Model& model, const std::vector<Sample>& dataset,
                   const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  const auto train_idx = indices_of_split(dataset, "train");
  const auto val_idx = indices_of_split(dataset, "val");
  if (train_idx.empty()) throw InvalidParameter("training split is empty");
  if (val_idx.empty()) throw InvalidParameter("validation split is empty");
  std::vector<Sample> val_samples;
  for (auto i : val_idx) val_samples.push_back(dataset[i]);

  const std::size_t image = model.config().input_size;
  const std::size_t grid = model.config().saliency_size();
  std::vector<std::optional<Mask>> masks(dataset.size());
  for (auto i : train_idx) {
    if (dataset[i].label == 1 && !dataset[i].boxes.empty()) {
      masks[i] = rasterize_union(dataset[i].boxes, image, grid);
    }
  }

  Rng shuffle_rng(stream_seed(config.seed, SeedStream::kShuffle));
  Rng dropout_rng(stream_seed(config.seed, SeedStream::kDropout));
  AdamState adam;
  const ObjectiveOptions guided{config.score_kind, config.alpha, config.k_percent,
                                config.stop_weights};
  const ObjectiveOptions warmup{ScoreKind::kPureBce, config.alpha, config.k_percent,
                                config.stop_weights};

  EpochHistory history;
  std::vector<std::size_t> order = train_idx;
  std::size_t batch_counter = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    const auto& objective = epoch <= config.warmup_epochs ? warmup : guided;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels;
      std::vector<std::optional<Mask>> batch_masks;
      for (auto i : idx) {
        labels.push_back(dataset[i].label);
        batch_masks.push_back(masks[i]);
      }
      const auto trace = model.forward(make_batch(dataset, idx), true, dropout_rng);
      const auto loss = batch_objective(trace, labels, batch_masks, objective);
      if (!std::isfinite(loss.total_value)) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(start / config.batch_size) +
                           " (global batch " + std::to_string(batch_counter) + ")");
      }
      const auto grads = backward(loss.total, model.parameters());
      adam_step(model.parameters(), grads, adam, config.learning_rate,
                config.weight_decay);

      const double weight = static_cast<double>(idx.size());
      rec.bce += loss.bce * weight;
      rec.exp_weighted += loss.alpha * loss.exp * weight;
      rec.total += loss.total_value * weight;
      rec.n_explained += loss.n_explained;
      rec.n_skipped += loss.n_skipped_degenerate;
      ++batch_counter;
    }
    const double n = static_cast<double>(order.size());
    rec.bce /= n;
    rec.exp_weighted /= n;
    rec.total /= n;
    rec.val_accuracy = accuracy(model, val_samples, config.batch_size);
    history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  if (hooks.checkpoint) save_checkpoint(model, *hooks.checkpoint);
  return history;
}

MetricsRecord evaluate(const Model& model, const std::vector<Sample>& samples,
                       ScoreKind kind, const EvalOptions& options) {
  if (samples.empty()) throw InvalidParameter("cannot evaluate an empty split");
  const std::size_t image = model.config().input_size;
  const std::size_t grid = model.config().saliency_size();
  const ExplainOptions explain{options.k_percent, false};
  Rng unused(0);

  MetricsRecord rec;
  rec.n_samples = samples.size();
  std::size_t correct = 0;
  double top_sum = 0.0, all_sum = 0.0;
  std::size_t top_n = 0, all_n = 0;
  CoverageCount coverage;

  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += options.batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + options.batch_size); ++i) {
      idx.push_back(i);
    }
    const auto trace = model.forward(make_batch(samples, idx), false, unused);
    const auto pred = argmax_rows(trace.logits);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto& smp = samples[idx[b]];
      correct += pred[b] == smp.label ? 1 : 0;
      if (smp.label != 1 || smp.boxes.empty()) continue;
      const auto sal = explain_sample(trace, b, kind, false, explain);
      const auto mask = rasterize_union(smp.boxes, image, grid);
      const auto grid_boxes = boxes_to_grid(smp.boxes, image, grid);
      coverage += annotation_coverage(sal.binary, sal.height, sal.width, grid_boxes,
                                      options.coverage_tau);
      const auto top = top_saliency_precision(sal.binary, mask);
      const auto all = all_saliency_precision(sal.normalized.values(), mask);
      if (sal.degenerate || !top) ++rec.n_degenerate;
      if (top) {
        top_sum += *top;
        ++top_n;
      }
      if (all) {
        all_sum += *all;
        ++all_n;
      }
    }
  }
  rec.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  rec.n_boxes = coverage.total;
  rec.coverage = coverage.total ? static_cast<double>(coverage.covered) /
                                      static_cast<double>(coverage.total)
                                : 0.0;
  if (top_n) rec.top_precision = top_sum / static_cast<double>(top_n);
  if (all_n) rec.all_precision = all_sum / static_cast<double>(all_n);
  return rec;
}

}  // namespace salguide
