#include "salguide/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "salguide/csv.hpp"
#include "salguide/error.hpp"
#include "salguide/sweep.hpp"

namespace salguide {

const std::vector<RunConfig::KeySpec>& RunConfig::keys() {
  static const std::vector<KeySpec> specs{
      // dataset
      {"image_size", "64", "image side length in pixels"},
      {"n_samples", "1200", "number of generated images"},
      {"positive_fraction", "0.5", "fraction of positive images"},
      {"background", "0.3", "background gray level"},
      {"noise_std", "0.08", "pixel noise standard deviation"},
      {"lesion_amplitude_min", "0.35", "lowest lesion peak intensity"},
      {"lesion_amplitude_max", "0.6", "highest lesion peak intensity"},
      {"lesion_sigma_min", "2", "smallest lesion radius (Gaussian sigma, px)"},
      {"lesion_sigma_max", "3.5", "largest lesion radius (Gaussian sigma, px)"},
      {"second_lesion_rate", "0.25", "probability of a second lesion"},
      {"confounder_rate", "0.9", "probability a positive carries the corner tag"},
      {"confounder_size", "6", "corner tag side length in pixels"},
      {"confounder_intensity", "1", "corner tag gray level"},
      {"train_fraction", "0.7", "training split fraction"},
      {"val_fraction", "0.15", "validation split fraction"},
      {"test_fraction", "0.15", "test split fraction"},
      {"seed", "1", "run and dataset seed"},
      // model
      {"channels", "8,16,16", "channels per conv stage"},
      {"kernel", "3", "conv kernel size"},
      {"dropout", "0.3", "dropout before the linear head"},
      // training
      {"epochs", "60", "training epochs"},
      {"learning_rate", "0.0002", "Adam learning rate"},
      {"weight_decay", "0.0001", "coupled L2 weight decay"},
      {"batch_size", "12", "batch size for training and evaluation"},
      {"alpha", "0.25", "explanation loss coefficient"},
      {"score_kind", "pure_bce", "explanation score formulation"},
      {"k_percent", "50", "percent of saliency retained by top-k thresholding"},
      {"stop_weights", "false", "treat Grad-CAM weights as constants in training"},
      {"warmup_epochs", "0", "leading epochs trained on bce alone"},
      // evaluation and output
      {"coverage_tau", "0.01", "salient density for a box to count as covered"},
      {"split", "test", "split to evaluate or export"},
      {"data_dir", "data", "dataset directory"},
      {"out_dir", "out", "output directory"},
      {"checkpoint", "", "checkpoint path (default <out_dir>/checkpoint.salg)"},
      {"metrics", "", "metrics CSV path (default <out_dir>/metrics.csv)"},
      {"run_id", "", "row identifier (default <kind>_a<alpha>_s<seed>)"},
      {"count", "8", "number of heatmaps to export"},
      // sweep
      {"sweep_kinds", "pure_bce,logit_alg,logit_abs,logit_sqr,logit_only,prob_alg,prob_abs,prob_sqr",
       "score kinds in the sweep grid"},
      {"sweep_alphas", "0.25,0.5,0.75,1", "alphas in the sweep grid"},
      {"sweep_seeds", "1,2,3", "seeds in the sweep grid"},
      {"jobs", "1", "concurrent sweep cells"},
      {"resume", "false", "skip sweep cells already present in metrics.csv"},
  };
  return specs;
}

bool RunConfig::is_key(const std::string& name) {
  const auto& k = keys();
  return std::any_of(k.begin(), k.end(), [&](const KeySpec& s) { return s.name == name; });
}

std::string RunConfig::normalize_key(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

RunConfig::RunConfig() {
  for (const auto& k : keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto name = normalize_key(key);
  if (!is_key(name)) throw InvalidParameter("unknown config key '" + key + "'");
  values_[name] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InvalidParameter("unknown config key '" + key + "'");
  return it->second;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = origin + ":" + std::to_string(line_no);
    // Strip a trailing comment, honoring double quotes.
    std::string line;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      line += c;
    }
    if (quoted) throw ParseError(where + ": unterminated string");
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (!is_identifier(key)) throw ParseError(where + ": invalid key '" + key + "'");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (value.find('"') != std::string::npos) {
      throw ParseError(where + ": stray quote in value");
    }
    if (!is_key(key)) throw InvalidParameter(where + ": unknown config key '" + key + "'");
    values_[key] = value;
  }
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw InvalidParameter("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw InvalidParameter("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidParameter("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto& item : split_fields(get(key))) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SynthConfig RunConfig::synth() const {
  SynthConfig c;
  c.image_size = get_uint("image_size");
  c.n_samples = get_uint("n_samples");
  c.positive_fraction = get_double("positive_fraction");
  c.background = get_double("background");
  c.noise_std = get_double("noise_std");
  c.lesion_amplitude_min = get_double("lesion_amplitude_min");
  c.lesion_amplitude_max = get_double("lesion_amplitude_max");
  c.lesion_sigma_min = get_double("lesion_sigma_min");
  c.lesion_sigma_max = get_double("lesion_sigma_max");
  c.second_lesion_rate = get_double("second_lesion_rate");
  c.confounder_rate = get_double("confounder_rate");
  c.confounder_size = get_uint("confounder_size");
  c.confounder_intensity = get_double("confounder_intensity");
  c.train_fraction = get_double("train_fraction");
  c.val_fraction = get_double("val_fraction");
  c.test_fraction = get_double("test_fraction");
  c.seed = get_uint("seed");
  c.validate();
  return c;
}

ModelConfig RunConfig::model() const {
  ModelConfig c;
  c.input_size = get_uint("image_size");
  c.channels.clear();
  for (const auto& item : get_list("channels")) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw InvalidParameter("key 'channels': bad entry '" + item + "'");
    }
    c.channels.push_back(v);
  }
  c.kernel = get_uint("kernel");
  c.dropout_p = get_double("dropout");
  c.validate();
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  c.epochs = get_uint("epochs");
  c.learning_rate = get_double("learning_rate");
  c.weight_decay = get_double("weight_decay");
  c.batch_size = get_uint("batch_size");
  c.alpha = get_double("alpha");
  const auto kind = parse_score_kind(get("score_kind"));
  if (!kind) {
    throw InvalidParameter("unknown score kind '" + get("score_kind") +
                           "' (valid: " + score_kind_names() + ")");
  }
  c.score_kind = *kind;
  c.k_percent = get_double("k_percent");
  c.seed = get_uint("seed");
  c.stop_weights = get_bool("stop_weights");
  c.warmup_epochs = get_uint("warmup_epochs");
  c.validate();
  return c;
}

EvalOptions RunConfig::eval() const {
  EvalOptions e;
  e.k_percent = get_double("k_percent");
  e.coverage_tau = get_double("coverage_tau");
  e.batch_size = get_uint("batch_size");
  if (e.batch_size == 0) throw InvalidParameter("batch_size must be >= 1");
  return e;
}

SweepSpec RunConfig::sweep() const {
  SweepSpec spec;
  for (const auto& name : get_list("sweep_kinds")) {
    const auto kind = parse_score_kind(name);
    if (!kind) {
      throw InvalidParameter("unknown score kind '" + name + "' (valid: " +
                             score_kind_names() + ")");
    }
    spec.kinds.push_back(*kind);
  }
  for (const auto& a : get_list("sweep_alphas")) {
    double v = 0.0;
    const auto res = std::from_chars(a.data(), a.data() + a.size(), v);
    if (res.ec != std::errc() || res.ptr != a.data() + a.size() || v < 0.0) {
      throw InvalidParameter("key 'sweep_alphas': bad entry '" + a + "'");
    }
    spec.alphas.push_back(v);
  }
  for (const auto& s : get_list("sweep_seeds")) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw InvalidParameter("key 'sweep_seeds': bad entry '" + s + "'");
    }
    spec.seeds.push_back(v);
  }
  if (spec.kinds.empty() || spec.alphas.empty() || spec.seeds.empty()) {
    throw InvalidParameter("sweep grid has an empty axis");
  }
  return spec;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  for (const auto& k : keys()) {
    const auto& v = values_.at(k.name);
    const bool needs_quotes = v.empty() || v.find_first_of(" #\t") != std::string::npos;
    out << k.name << " = " << (needs_quotes ? "\"" + v + "\"" : v) << '\n';
  }
  return out.str();
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << resolved_text();
}

}  // namespace salguide
