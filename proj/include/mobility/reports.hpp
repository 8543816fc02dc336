#pragma once

#include "mobility/config.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mobility {

/// Shortest round-trip decimal form; NaN is written as an empty field.
std::string format_double(double v);

/// One CSV field, formatted on construction.
class Field {
 public:
  Field(double v) : text_(format_double(v)) {}
  Field(std::optional<double> v) : text_(v ? format_double(*v) : std::string()) {}
  Field(int v) : text_(std::to_string(v)) {}
  Field(long v) : text_(std::to_string(v)) {}
  Field(long long v) : text_(std::to_string(v)) {}
  Field(unsigned v) : text_(std::to_string(v)) {}
  Field(unsigned long v) : text_(std::to_string(v)) {}
  Field(unsigned long long v) : text_(std::to_string(v)) {}
  Field(bool v) : text_(v ? "true" : "false") {}
  Field(const char* v) : text_(v) {}
  Field(std::string v) : text_(std::move(v)) {}
  Field(std::string_view v) : text_(v) {}

  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// In-memory CSV table; rows are written in insertion order.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void row(std::initializer_list<Field> fields);
  void row(const std::vector<Field>& fields);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  void append(const Field* begin, const Field* end);

  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

struct OutputEntry {
  std::string file;
  std::size_t rows = 0;
  std::string digest;
};

/// Writes report files into one directory and remembers what was written.
class ReportSink {
 public:
  explicit ReportSink(std::filesystem::path dir);

  void write(const std::string& name, const CsvTable& table);
  void write_text(const std::string& name, std::string_view text, std::size_t rows);
  void warn(std::string message);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] const std::vector<OutputEntry>& outputs() const { return outputs_; }
  [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputEntry> outputs_;
  std::vector<std::string> warnings_;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes `manifest_<subcommand>.json` whatever the
/// outcome. Returns 0 on success, 1 on input errors, 2 on computation errors.
int run_command(const std::string& subcommand, const RunConfig& cfg, std::ostream& log);

}  // namespace mobility
