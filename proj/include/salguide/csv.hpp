#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace salguide {

// Comma-separated, LF-terminated, unquoted; fields must not contain commas
// or line breaks.
class CsvWriter {
 public:
  enum class Mode { kTruncate, kAppend };

  // kAppend keeps existing rows when the file already carries the same
  // header and throws ParseError when it carries a different one.
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
            Mode mode = Mode::kTruncate);

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::ofstream out_;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

// Reads a file whose first line must equal `header`.
std::vector<CsvRow> read_csv(const std::filesystem::path& path,
                             const std::vector<std::string>& header);

std::vector<std::string> split_fields(const std::string& line);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

}  // namespace salguide
