#include "csvio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace cli {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(3, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw CliError(3, "read failed for " + path);
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(3, "cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw CliError(3, "write failed for " + path);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  const char* first = text.data();
  const char* last = first + text.size();
  double value = 0.0;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw CliError(3, where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(3, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw CliError(3, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.empty()) throw CliError(3, path + ": empty header");

  Dataset d;
  std::size_t id_col = header.size();
  std::size_t label_col = header.size();
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == 0 && header[j] == "id") {
      d.has_ids = true;
      id_col = j;
    } else if ((header[j] == "label" || header[j] == "source_label") &&
               label_col == header.size()) {
      d.has_labels = true;
      label_col = j;
    } else {
      d.columns.push_back(header[j]);
      feature_cols.push_back(j);
    }
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw CliError(3, path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    if (d.has_ids) d.ids.push_back(cells[id_col]);
    if (d.has_labels) d.labels.push_back(cells[label_col]);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::size_t j = feature_cols[k];
      d.values.push_back(parse_double(
          cells[j], path + ": row " + std::to_string(row) + ", column '" +
                        header[j] + "'"));
    }
  }
  if (in.bad()) throw CliError(3, "read failed for " + path);
  d.rows = row;
  return d;
}

std::string fnv1a64_file(const std::string& path) {
  const std::string bytes = slurp(path);
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cli
