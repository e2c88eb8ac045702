#include "tailtopo/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tailtopo/error.hpp"

namespace tailtopo::csv {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

Table parse(std::string_view text) {
  Table t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto raw = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    const auto line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      if (!have_header) t.comments.push_back(trim(std::string_view(line).substr(1)));
    } else if (!have_header) {
      t.header = split_line(line);
      t.header_line = line_no;
      have_header = true;
    } else {
      Row r{line_no, split_line(line)};
      if (r.fields.size() != t.header.size()) {
        throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                             std::to_string(r.fields.size()),
                         line_no);
      }
      t.rows.push_back(std::move(r));
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError("missing header row", line_no == 0 ? 1 : line_no);
  return t;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

double parse_double(std::string_view field, std::size_t line) {
  // strtod accepts "nan"/"inf" spellings, which we want to see so they can be rejected
  // with a validation error rather than a parse error.
  const std::string s(field);
  if (s.empty()) throw ParseError("empty numeric field", line);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError("not a number: '" + s + "'", line);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string comment_value(const Table& table, std::string_view key) {
  for (const auto& c : table.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    if (trim(std::string_view(c).substr(0, eq)) == key) return trim(std::string_view(c).substr(eq + 1));
  }
  return {};
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_matrix(const std::vector<std::string>& comments,
                          const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) s += ',';
    s += header[j];
  }
  s += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) s += ',';
      s += format_double(values(i, j));
    }
    s += '\n';
  }
  return s;
}

}  // namespace tailtopo::csv
