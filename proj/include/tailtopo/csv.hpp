#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tailtopo::csv {

struct Row {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<std::string> fields;
};

// A comma-separated file: leading `#` comment lines, one header row, data rows.
// Comment lines after the header are ignored; blank lines are skipped.
struct Table {
  std::vector<std::string> comments;  // text after '#', trimmed
  std::vector<std::string> header;
  std::size_t header_line = 0;
  std::vector<Row> rows;
};

Table read_file(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);
std::string trim(std::string_view s);

// Parses a full field as a double; throws ParseError carrying `line` on failure.
double parse_double(std::string_view field, std::size_t line);

// Shortest text that round-trips (17 significant digits when needed).
std::string format_double(double v);

// Looks up `key=value` among comment lines; returns empty string when absent.
std::string comment_value(const Table& table, std::string_view key);

void write_text(const std::filesystem::path& path, std::string_view content);

// Header + comments + matrix rows, every value written with format_double.
std::string format_matrix(const std::vector<std::string>& comments,
                          const std::vector<std::string>& header, const Eigen::MatrixXd& values);

}  // namespace tailtopo::csv
