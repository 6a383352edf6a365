#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "salguide/metrics.hpp"
#include "salguide/model.hpp"
#include "salguide/scores.hpp"
#include "salguide/trainer.hpp"

namespace salguide {

struct SweepSpec {
  std::vector<ScoreKind> kinds;
  std::vector<double> alphas;
  std::vector<std::uint64_t> seeds;
};

struct SweepCell {
  ScoreKind kind = ScoreKind::kPureBce;
  double alpha = 0.0;
  std::uint64_t seed = 0;

  std::string run_id() const;
};

// Kinds outermost, then alphas, then seeds.
std::vector<SweepCell> enumerate_cells(const SweepSpec& spec);

std::string make_run_id(ScoreKind kind, double alpha, std::uint64_t seed);

// Column layout of metrics.csv as written by `eval`; sweeps append `status`.
const std::vector<std::string>& metrics_header();
const std::vector<std::string>& sweep_metrics_header();
const std::vector<std::string>& summary_header();
const std::vector<std::string>& history_header();

std::vector<std::string> metrics_fields(const std::string& run_id, ScoreKind kind,
                                        double alpha, std::uint64_t seed,
                                        const std::string& split,
                                        const MetricsRecord& record);

void write_history(const std::filesystem::path& path, const EpochHistory& history);

struct SweepOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  TrainConfig train;  // kind, alpha and seed are overridden per cell
  ModelConfig model;
  EvalOptions eval;
  std::string split = "test";
  std::size_t jobs = 1;
  bool resume = false;
  std::function<void(const std::string&)> log;
};

struct SweepResult {
  std::size_t completed = 0;
  std::size_t skipped = 0;  // already present when resuming
  std::size_t failed = 0;
};

// Trains and evaluates every cell, appending rows to <out_dir>/metrics.csv in
// cell order, then rewrites <out_dir>/summary.csv with box-plot statistics
// grouped by score kind and by alpha. A failing cell is recorded with status
// "failed" and the sweep continues.
SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options);

// Recomputes summary rows from a metrics.csv written by run_sweep.
void write_summary(const std::filesystem::path& metrics_csv,
                   const std::filesystem::path& summary_csv);

}  // namespace salguide
