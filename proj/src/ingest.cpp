#include "tailtopo/ingest.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"

namespace tailtopo {

namespace {

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> out;
  for (auto& s : csv::split_line(text)) {
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

Matrix parse_matrix(const csv::Table& table, const std::filesystem::path& path) {
  Matrix m(static_cast<Eigen::Index>(table.rows.size()),
           static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < row.fields.size(); ++j) {
      const double v = csv::parse_double(row.fields[j], row.line);
      if (!std::isfinite(v)) {
        throw ValidationError(path.string() + ": non-finite value in channel '" +
                              table.header[j] + "' at row " + std::to_string(i + 1) + " (line " +
                              std::to_string(row.line) + ")");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

}  // namespace

ChannelPartition ChannelPartition::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || text.find(':', colon + 1) != std::string::npos) {
    throw InvalidArgument("partition must look like 'X1,X2:Y1,Y2', got '" + text + "'");
  }
  return {split_labels(text.substr(0, colon)), split_labels(text.substr(colon + 1))};
}

ChannelPartition ChannelPartition::halves(const std::vector<std::string>& channels) {
  const auto p = channels.size() / 2;
  return {{channels.begin(), channels.begin() + static_cast<std::ptrdiff_t>(p)},
          {channels.begin() + static_cast<std::ptrdiff_t>(p), channels.end()}};
}

std::string ChannelPartition::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < x_channels.size(); ++i) s += (i ? "," : "") + x_channels[i];
  s += ':';
  for (std::size_t i = 0; i < y_channels.size(); ++i) s += (i ? "," : "") + y_channels[i];
  return s;
}

void check_unique_labels(const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw ValidationError("empty channel label");
    if (!seen.insert(l).second) throw ValidationError("duplicate channel label '" + l + "'");
  }
}

SignalPanel load_signal_panel(const std::filesystem::path& path, double sampling_rate_hz,
                              std::optional<std::string> subject_id) {
  if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) {
    throw InvalidArgument("sampling rate must be positive");
  }
  const auto table = csv::read_file(path);
  check_unique_labels(table.header);
  if (table.rows.empty()) throw ParseError(path.string() + ": no samples", table.header_line);
  SignalPanel panel;
  panel.subject_id = subject_id.value_or(path.stem().string());
  panel.channels = table.header;
  panel.samples = parse_matrix(table, path);
  panel.sampling_rate_hz = sampling_rate_hz;
  return panel;
}

BandPeriodogramPanel load_feature_panel(const std::filesystem::path& path,
                                        const FeatureLoadOptions& options,
                                        std::optional<std::string> subject_id) {
  const auto table = csv::read_file(path);
  check_unique_labels(table.header);
  if (table.rows.empty()) throw ParseError(path.string() + ": no blocks", table.header_line);

  BandPeriodogramPanel panel;
  panel.subject_id = subject_id.value_or(path.stem().string());
  panel.channels = table.header;
  panel.values = parse_matrix(table, path);
  if (options.require_positive) {
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
        if (!(panel.values(i, j) > 0.0)) {
          throw ValidationError(path.string() + ": non-positive value " +
                                csv::format_double(panel.values(i, j)) + " in channel '" +
                                panel.channels[static_cast<std::size_t>(j)] + "' at row " +
                                std::to_string(i + 1));
        }
      }
    }
  }

  if (options.band_override) {
    panel.band = *options.band_override;
  } else if (auto tag = csv::comment_value(table, "band"); !tag.empty()) {
    panel.band = BandSpec::parse(tag);
  }
  if (auto a = csv::comment_value(table, "block_length"); !a.empty()) {
    panel.block_length = static_cast<std::size_t>(std::stoul(a));
  }
  if (auto sr = csv::comment_value(table, "sampling_rate_hz"); !sr.empty()) {
    panel.sampling_rate_hz = std::stod(sr);
  }
  panel.detrended = csv::comment_value(table, "detrend") == "block_mean";
  return panel;
}

std::string format_feature_panel(const BandPeriodogramPanel& panel,
                                 const std::vector<std::string>& extra_comments) {
  std::vector<std::string> comments{"band=" + panel.band.tag()};
  if (panel.block_length) comments.push_back("block_length=" + std::to_string(panel.block_length));
  if (panel.sampling_rate_hz > 0) {
    comments.push_back("sampling_rate_hz=" + csv::format_double(panel.sampling_rate_hz));
  }
  if (panel.detrended) comments.push_back("detrend=block_mean");
  comments.insert(comments.end(), extra_comments.begin(), extra_comments.end());
  return csv::format_matrix(comments, panel.channels, panel.values);
}

void write_feature_panel(const std::filesystem::path& path, const BandPeriodogramPanel& panel,
                         const std::vector<std::string>& extra_comments) {
  csv::write_text(path, format_feature_panel(panel, extra_comments));
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < table.header.size(); ++j) col[table.header[j]] = j;
  if (!col.count("subject_id") || !col.count("path")) {
    throw ParseError(path.string() + ": manifest needs columns subject_id,path[,label]",
                     table.header_line);
  }
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.subject_id = row.fields[col["subject_id"]];
    if (e.subject_id.empty()) throw ParseError("empty subject_id", row.line);
    if (!ids.insert(e.subject_id).second) {
      throw ValidationError("duplicate subject_id '" + e.subject_id + "' in manifest");
    }
    std::filesystem::path p = row.fields[col["path"]];
    e.path = p.is_absolute() ? p : base / p;
    if (col.count("label")) {
      const auto& l = row.fields[col["label"]];
      if (!l.empty()) {
        int v = 0;
        try {
          std::size_t used = 0;
          v = std::stoi(l, &used);
          if (used != l.size()) throw std::invalid_argument(l);
        } catch (const std::exception&) {
          throw ParseError("label must be an integer: '" + l + "'", row.line);
        }
        if (v < 1) throw ParseError("label must be >= 1", row.line);
        e.label = v;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::string s = "subject_id,path,label\n";
  const auto base = path.parent_path();
  for (const auto& e : entries) {
    auto rel = e.path.is_absolute() ? std::filesystem::relative(e.path, base) : e.path;
    s += e.subject_id + "," + rel.generic_string() + "," +
         (e.label ? std::to_string(*e.label) : std::string()) + "\n";
  }
  csv::write_text(path, s);
}

ResolvedPartition resolve_partition(const ChannelPartition& partition,
                                    const std::vector<std::string>& channels,
                                    std::size_t min_size) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t j = 0; j < channels.size(); ++j) index[channels[j]] = static_cast<Eigen::Index>(j);

  std::set<std::string> used;
  auto lookup = [&](const std::vector<std::string>& labels, const char* side) {
    std::vector<Eigen::Index> out;
    for (const auto& l : labels) {
      auto it = index.find(l);
      if (it == index.end()) {
        throw ValidationError(std::string("partition ") + side + " channel '" + l +
                              "' not found in panel");
      }
      if (!used.insert(l).second) {
        throw ValidationError("channel '" + l + "' appears more than once in the partition");
      }
      out.push_back(it->second);
    }
    return out;
  };
  ResolvedPartition r{lookup(partition.x_channels, "X"), lookup(partition.y_channels, "Y")};
  if (r.p() < min_size || r.q() < min_size) {
    throw ValidationError("partition needs at least " + std::to_string(min_size) +
                          " channels per side (P=" + std::to_string(r.p()) +
                          ", Q=" + std::to_string(r.q()) + ")");
  }
  return r;
}

Matrix select_partition_columns(const Matrix& panel, const ResolvedPartition& resolved) {
  Matrix out(panel.rows(), static_cast<Eigen::Index>(resolved.p() + resolved.q()));
  Eigen::Index c = 0;
  for (auto j : resolved.x_index) out.col(c++) = panel.col(j);
  for (auto j : resolved.y_index) out.col(c++) = panel.col(j);
  return out;
}

}  // namespace tailtopo
