#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "salguide/model.hpp"
#include "salguide/synthdata.hpp"
#include "salguide/trainer.hpp"

namespace salguide {

struct SweepSpec;

// Flat `key = value` run configuration.
//
// Grammar, one entry per line:
//   line    := blank | comment | key '=' value [comment]
//   key     := [A-Za-z_][A-Za-z0-9_]*
//   value   := number | identifier | path | list | '"' any-but-quote '"'
//   comment := '#' to end of line (outside quotes)
// Lists are comma-separated without spaces inside quotes or bare. Every key
// has a default; unknown keys are rejected. On the command line a key is
// written --key-name (dashes or underscores both accepted).
class RunConfig {
 public:
  struct KeySpec {
    std::string name;
    std::string default_value;
    std::string help;
  };

  RunConfig();

  static const std::vector<KeySpec>& keys();
  static bool is_key(const std::string& name);
  // Maps "n-samples" to "n_samples".
  static std::string normalize_key(std::string name);

  // Throws InvalidParameter for unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  // Throws ParseError (with line number) or InvalidParameter.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");

  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  SynthConfig synth() const;
  ModelConfig model() const;
  TrainConfig train() const;
  EvalOptions eval() const;
  SweepSpec sweep() const;

  // Every key in registry order, one `key = value` line each.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace salguide
