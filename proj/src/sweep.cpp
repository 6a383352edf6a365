#include "salguide/sweep.hpp"

#include <atomic>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "salguide/csv.hpp"
#include "salguide/error.hpp"
#include "salguide/synthdata.hpp"

namespace salguide {

namespace fs = std::filesystem;

std::string make_run_id(ScoreKind kind, double alpha, std::uint64_t seed) {
  return std::string(to_string(kind)) + "_a" + format_double(alpha) + "_s" +
         std::to_string(seed);
}

std::string SweepCell::run_id() const { return make_run_id(kind, alpha, seed); }

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  for (auto kind : spec.kinds)
    for (double alpha : spec.alphas)
      for (auto seed : spec.seeds) cells.push_back({kind, alpha, seed});
  return cells;
}

const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h{
      "run_id",   "score_kind",    "alpha",         "seed",        "split",
      "accuracy", "coverage",      "top_precision", "all_precision", "n_degenerate"};
  return h;
}

const std::vector<std::string>& sweep_metrics_header() {
  static const std::vector<std::string> h = [] {
    auto v = metrics_header();
    v.push_back("status");
    return v;
  }();
  return h;
}

const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"group_by", "group_value", "metric", "min",
                                          "q1",       "median",      "q3",     "max",
                                          "mean"};
  return h;
}

const std::vector<std::string>& history_header() {
  static const std::vector<std::string> h{"epoch", "bce", "exp_weighted", "total",
                                          "val_accuracy"};
  return h;
}

std::vector<std::string> metrics_fields(const std::string& run_id, ScoreKind kind,
                                        double alpha, std::uint64_t seed,
                                        const std::string& split,
                                        const MetricsRecord& r) {
  return {run_id,
          std::string(to_string(kind)),
          format_double(alpha),
          std::to_string(seed),
          split,
          format_double(r.accuracy),
          format_double(r.coverage),
          format_optional(r.top_precision),
          format_optional(r.all_precision),
          std::to_string(r.n_degenerate)};
}

void write_history(const fs::path& path, const EpochHistory& history) {
  CsvWriter out(path, history_header());
  for (const auto& e : history) {
    out.row({std::to_string(e.epoch), format_double(e.bce), format_double(e.exp_weighted),
             format_double(e.total), format_double(e.val_accuracy)});
  }
  out.close();
}

namespace {

std::vector<std::string> run_cell(const SweepCell& cell, const SweepOptions& options,
                                  const std::vector<Sample>& dataset,
                                  const std::vector<Sample>& eval_split) {
  TrainConfig tc = options.train;
  tc.score_kind = cell.kind;
  tc.alpha = cell.alpha;
  tc.seed = cell.seed;
  const auto run_dir = options.out_dir / "runs" / cell.run_id();
  fs::create_directories(run_dir);
  Model model = init_for_run(options.model, cell.seed);
  const auto history = train(model, dataset, tc, {{}, run_dir / "checkpoint.salg"});
  write_history(run_dir / "history.csv", history);
  const auto record = evaluate(model, eval_split, cell.kind, options.eval);
  auto fields = metrics_fields(cell.run_id(), cell.kind, cell.alpha, cell.seed,
                               options.split, record);
  fields.push_back("ok");
  return fields;
}

std::vector<std::string> failed_fields(const SweepCell& cell, const std::string& split) {
  return {cell.run_id(), std::string(to_string(cell.kind)), format_double(cell.alpha),
          std::to_string(cell.seed), split, "", "", "", "", "", "failed"};
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  const auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  if (!is_valid_split(options.split)) {
    throw InvalidParameter("unknown split '" + options.split + "'");
  }
  options.model.validate();
  options.train.validate();
  fs::create_directories(options.out_dir);
  const auto metrics_path = options.out_dir / "metrics.csv";

  std::set<std::string> present;
  if (options.resume && fs::exists(metrics_path)) {
    for (const auto& row : read_csv(metrics_path, sweep_metrics_header())) {
      present.insert(row.fields[0]);
    }
  }

  const auto cells = enumerate_cells(spec);
  std::vector<std::size_t> todo;
  SweepResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (present.count(cells[i].run_id())) {
      ++result.skipped;
    } else {
      todo.push_back(i);
    }
  }

  const auto dataset = load_dataset(options.data_dir, "all");
  std::vector<Sample> eval_split;
  for (const auto& s : dataset) {
    if (options.split == "all" || s.split == options.split) eval_split.push_back(s);
  }

  CsvWriter writer(metrics_path, sweep_metrics_header(),
                   options.resume ? CsvWriter::Mode::kAppend : CsvWriter::Mode::kTruncate);

  // Workers fill slots; this thread writes them strictly in cell order.
  std::vector<std::optional<std::vector<std::string>>> rows(todo.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, todo.size()));

  const auto worker = [&] {
#ifdef _OPENMP
    if (jobs > 1) omp_set_num_threads(1);
#endif
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= todo.size()) return;
      const auto& cell = cells[todo[slot]];
      std::vector<std::string> fields;
      try {
        fields = run_cell(cell, options, dataset, eval_split);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        log("cell " + cell.run_id() + " failed: " + e.what());
        fields = failed_fields(cell, options.split);
      }
      std::lock_guard lock(mu);
      rows[slot] = std::move(fields);
      ready.notify_all();
    }
  };

  std::vector<std::thread> pool;
  if (jobs > 1) {
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (std::size_t slot = 0; slot < todo.size(); ++slot) {
    if (jobs == 1) {
      // Run inline so single-job sweeps stay on the calling thread.
      const auto& cell = cells[todo[slot]];
      try {
        rows[slot] = run_cell(cell, options, dataset, eval_split);
      } catch (const std::exception& e) {
        log("cell " + cell.run_id() + " failed: " + e.what());
        rows[slot] = failed_fields(cell, options.split);
      }
    }
    std::unique_lock lock(mu);
    ready.wait(lock, [&] { return rows[slot].has_value(); });
    const auto fields = *rows[slot];
    lock.unlock();
    writer.row(fields);
    if (fields.back() == "ok") {
      ++result.completed;
    } else {
      ++result.failed;
    }
    log("[" + std::to_string(slot + 1) + "/" + std::to_string(todo.size()) + "] " +
        fields[0] + " " + fields.back());
  }
  for (auto& t : pool) t.join();
  writer.close();

  write_summary(metrics_path, options.out_dir / "summary.csv");
  return result;
}

void write_summary(const fs::path& metrics_csv, const fs::path& summary_csv) {
  const auto rows = read_csv(metrics_csv, sweep_metrics_header());
  const std::vector<std::pair<std::string, std::size_t>> metrics{
      {"accuracy", 5}, {"coverage", 6}, {"top_precision", 7}, {"all_precision", 8}};
  const std::vector<std::pair<std::string, std::size_t>> groupings{{"score_kind", 1},
                                                                   {"alpha", 2}};
  CsvWriter out(summary_csv, summary_header());
  for (const auto& [group_by, column] : groupings) {
    // Group values in order of first appearance, which follows cell order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const CsvRow*>> groups;
    for (const auto& row : rows) {
      if (row.fields.back() != "ok") continue;
      const auto& key = row.fields[column];
      if (!groups.count(key)) order.push_back(key);
      groups[key].push_back(&row);
    }
    for (const auto& value : order) {
      for (const auto& [metric, mcol] : metrics) {
        std::vector<double> values;
        for (const auto* row : groups[value]) {
          const auto& f = row->fields[mcol];
          if (!f.empty()) values.push_back(std::stod(f));
        }
        if (values.empty()) continue;
        const auto s = boxplot_stats(values);
        out.row({group_by, value, metric, format_double(s.min), format_double(s.q1),
                 format_double(s.median), format_double(s.q3), format_double(s.max),
                 format_double(s.mean)});
      }
    }
  }
  out.close();
}

}  // namespace salguide
