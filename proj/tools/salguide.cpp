// Command-line front end: generate | train | eval | sweep | export-heatmaps.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "salguide/csv.hpp"
#include "salguide/error.hpp"
#include "salguide/heatmap_export.hpp"
#include "salguide/run_config.hpp"
#include "salguide/runtime.hpp"
#include "salguide/sweep.hpp"
#include "salguide/synthdata.hpp"
#include "salguide/trainer.hpp"

namespace fs = std::filesystem;
using namespace salguide;

namespace {

// Options shared by every subcommand: --config plus one flag per config key.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value config file")
        ->check(CLI::ExistingFile);
    for (const auto& key : RunConfig::keys()) {
      std::string flag = key.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::string help = key.help;
      if (!key.default_value.empty()) help += " [" + key.default_value + "]";
      options[key.name] = cmd->add_option("--" + flag, values[key.name], help);
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    if (const char* env = std::getenv("SALGUIDE_SEED"); env && *env) {
      cfg.set("seed", env);
    }
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) cfg.set(name, values.at(name));
    }
    return cfg;
  }
};

fs::path path_or(const RunConfig& cfg, const std::string& key, const fs::path& fallback) {
  const auto& v = cfg.get(key);
  return v.empty() ? fallback : fs::path(v);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Model geometry follows the dataset's image size.
ModelConfig model_for(const RunConfig& cfg, const std::vector<Sample>& data) {
  auto mc = cfg.model();
  if (!data.empty()) mc.input_size = data.front().size;
  mc.validate();
  return mc;
}

int cmd_generate(const RunConfig& cfg) {
  const auto synth = cfg.synth();
  const fs::path dir = cfg.get("data_dir");
  const auto m = generate_dataset(synth, dir);
  cfg.write_resolved(dir / "generate_config.resolved");
  std::cout << "generated " << m.n_samples << " images in " << dir.string() << ": "
            << m.n_positive << " positive, " << m.n_boxes << " boxes, " << m.n_confounded
            << " confounded; train/val/test " << m.n_train << "/" << m.n_val << "/"
            << m.n_test << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto tc = cfg.train();
  const auto data = load_dataset(cfg.get("data_dir"), "all");
  const auto mc = model_for(cfg, data);
  const fs::path out = cfg.get("out_dir");
  ensure_dir(out);
  cfg.write_resolved(out / "train_config.resolved");
  const auto checkpoint = path_or(cfg, "checkpoint", out / "checkpoint.salg");

  Model model = init_for_run(mc, tc.seed);
  TrainHooks hooks;
  hooks.checkpoint = checkpoint;
  hooks.on_epoch = [&](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << "/" << tc.epochs << " bce " << e.bce << " exp "
              << e.exp_weighted << " total " << e.total << " val_acc " << e.val_accuracy
              << "\n";
  };
  const auto history = train(model, data, tc, hooks);
  write_history(out / "history.csv", history);
  std::cout << "wrote " << checkpoint.string() << " and " << (out / "history.csv").string()
            << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const auto tc = cfg.train();
  const auto split = cfg.get("split");
  if (!is_valid_split(split)) {
    throw InvalidParameter("unknown split '" + split + "' (expected train, val, test or all)");
  }
  const fs::path out = cfg.get("out_dir");
  const auto checkpoint = path_or(cfg, "checkpoint", out / "checkpoint.salg");
  const auto metrics = path_or(cfg, "metrics", out / "metrics.csv");
  const Model model = load_checkpoint(checkpoint);
  const auto samples = load_dataset(cfg.get("data_dir"), split);
  const auto record = evaluate(model, samples, tc.score_kind, cfg.eval());

  auto run_id = cfg.get("run_id");
  if (run_id.empty()) run_id = make_run_id(tc.score_kind, tc.alpha, tc.seed);
  if (metrics.has_parent_path()) ensure_dir(metrics.parent_path());
  cfg.write_resolved(metrics.parent_path() / "eval_config.resolved");
  const auto fields = metrics_fields(run_id, tc.score_kind, tc.alpha, tc.seed, split, record);
  CsvWriter writer(metrics, metrics_header(), CsvWriter::Mode::kAppend);
  writer.row(fields);
  writer.close();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::cout << (i ? "," : "") << fields[i];
  }
  std::cout << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const auto spec = cfg.sweep();
  SweepOptions opt;
  opt.data_dir = cfg.get("data_dir");
  opt.out_dir = cfg.get("out_dir");
  opt.train = cfg.train();
  opt.eval = cfg.eval();
  opt.split = cfg.get("split");
  opt.jobs = cfg.get_uint("jobs");
  opt.resume = cfg.get_bool("resume");
  opt.log = [](const std::string& msg) { std::cerr << msg << "\n"; };
  {
    // Geometry from one image; run_sweep loads the full dataset itself.
    const auto probe = load_dataset(opt.data_dir, "all");
    opt.model = model_for(cfg, probe);
  }
  ensure_dir(opt.out_dir);
  cfg.write_resolved(opt.out_dir / "sweep_config.resolved");
  const auto r = run_sweep(spec, opt);
  std::cout << "sweep: " << r.completed << " completed, " << r.skipped << " skipped, "
            << r.failed << " failed; wrote " << (opt.out_dir / "metrics.csv").string()
            << " and " << (opt.out_dir / "summary.csv").string() << "\n";
  return r.failed == 0 ? 0 : 1;
}

int cmd_export(const RunConfig& cfg) {
  const auto tc = cfg.train();
  const auto split = cfg.get("split");
  if (!is_valid_split(split)) throw InvalidParameter("unknown split '" + split + "'");
  const fs::path out = cfg.get("out_dir");
  const auto checkpoint = path_or(cfg, "checkpoint", out / "checkpoint.salg");
  const Model model = load_checkpoint(checkpoint);
  const auto samples = load_dataset(cfg.get("data_dir"), split);
  const auto files = export_heatmaps(model, samples, tc.score_kind, cfg.get_uint("count"),
                                     out, cfg.get_double("k_percent"));
  cfg.write_resolved(out / "export_config.resolved");
  std::cout << "wrote " << files.size() << " graymaps to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  salguide::configure_allocator();
  CLI::App app{"Explanation-guided training and saliency evaluation"};
  app.require_subcommand(1);
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
    ConfigFlags flags;
    CLI::App* app = nullptr;
  };
  std::vector<Command> commands;
  commands.push_back({"generate", "write a synthetic confounded dataset", cmd_generate, {}});
  commands.push_back({"train", "train one model and write checkpoint + history.csv", cmd_train, {}});
  commands.push_back({"eval", "append one metrics row for a checkpoint", cmd_eval, {}});
  commands.push_back({"sweep", "train and evaluate a kind x alpha x seed grid", cmd_sweep, {}});
  commands.push_back({"export-heatmaps", "write Grad-CAM graymaps for positive samples", cmd_export, {}});
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    c.flags.attach(c.app);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      const auto cfg = c.flags.resolve();
      return c.run(cfg);
    } catch (const InvalidParameter& e) {
      std::cerr << "salguide " << c.name << ": error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "salguide " << c.name << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
