#ifndef TOOLS_CSVIO_HPP
#define TOOLS_CSVIO_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cli {

// Thrown by command plumbing; main() turns it into the exit code.
// 2 = usage, 3 = data, 4 = numeric failure.
struct CliError {
  int exit_code;
  std::string message;
  CliError(int code, std::string msg)
      : exit_code(code), message(std::move(msg)) {}
};

// A parsed CSV file. An optional leading "id" column and an optional
// "label" (or "source_label") column are captured separately; every
// other column is a numeric feature, stored row-major.
struct Dataset {
  std::vector<std::string> columns;  // feature column names, file order
  std::vector<double> values;        // rows x columns.size(), row-major
  std::size_t rows = 0;
  bool has_ids = false;
  std::vector<std::string> ids;
  bool has_labels = false;
  std::vector<std::string> labels;
};

Dataset read_dataset(const std::string& path);

// Shortest decimal form that parses back to the same double. Handles
// inf and nan the way parse_double expects them.
std::string format_double(double v);

// Strict full-token parse; context strings feed the error message.
double parse_double(const std::string& text, const std::string& where);

std::string slurp(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit of the file's bytes, as 16 lowercase hex digits.
std::string fnv1a64_file(const std::string& path);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace cli

#endif
