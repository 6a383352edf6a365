#include "salguide/csv.hpp"

#include <charconv>

#include "salguide/error.hpp"

namespace salguide {

namespace {

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line;
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
                     Mode mode)
    : path_(path), columns_(header.size()) {
  bool write_header = true;
  if (mode == Mode::kAppend && std::filesystem::exists(path) &&
      std::filesystem::file_size(path) > 0) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (first != join(header)) {
      throw ParseError(path.string() + ":1: existing header '" + first +
                       "' differs from '" + join(header) + "'");
    }
    write_header = false;
  }
  out_.open(path, std::ios::binary | (mode == Mode::kAppend ? std::ios::app : std::ios::trunc));
  if (!out_) throw IoError("cannot write " + path.string());
  if (write_header) out_ << join(header) << '\n';
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw InvalidParameter("csv row with " + std::to_string(fields.size()) +
                           " fields for " + std::to_string(columns_) + " columns");
  }
  for (const auto& f : fields) {
    if (f.find_first_of(",\n\r") != std::string::npos) {
      throw InvalidParameter("csv field contains a separator: " + f);
    }
  }
  out_ << join(fields) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing " + path_.string());
}

void CsvWriter::close() {
  if (out_.is_open()) out_.close();
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path,
                             const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t number = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != join(header)) {
        throw ParseError(path.string() + ":1: expected header '" + join(header) + "'");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    rows.push_back({number, std::move(fields)});
  }
  if (!saw_header) throw ParseError(path.string() + ": missing header row");
  return rows;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace salguide
