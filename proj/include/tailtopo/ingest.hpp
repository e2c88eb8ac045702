#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tailtopo/types.hpp"

namespace tailtopo {

// Signal CSV: header of channel labels, one row per time sample.
// The subject id defaults to the file stem.
SignalPanel load_signal_panel(const std::filesystem::path& path, double sampling_rate_hz,
                              std::optional<std::string> subject_id = std::nullopt);

struct FeatureLoadOptions {
  // Raw periodogram panels must be strictly positive. Standardized panels (symmetric Pareto
  // margins) legitimately carry negative values and are loaded with this off.
  bool require_positive = true;
  std::optional<BandSpec> band_override;
};

// Feature CSV: `# band=<tag>` comment, optional `# key=value` metadata, header, B rows x D.
BandPeriodogramPanel load_feature_panel(const std::filesystem::path& path,
                                        const FeatureLoadOptions& options = {},
                                        std::optional<std::string> subject_id = std::nullopt);

// Writes 17-significant-digit values so load_feature_panel reproduces them bit-exactly.
void write_feature_panel(const std::filesystem::path& path, const BandPeriodogramPanel& panel,
                         const std::vector<std::string>& extra_comments = {});
std::string format_feature_panel(const BandPeriodogramPanel& panel,
                                 const std::vector<std::string>& extra_comments = {});

struct ManifestEntry {
  std::string subject_id;
  std::filesystem::path path;  // resolved against the manifest's directory
  std::optional<int> label;
};

// Columns subject_id,path[,label]; label empty or an integer >= 1.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Fails with ValidationError when a label is unknown, duplicated, or shared by X and Y,
// or when either side has fewer than `min_size` channels.
ResolvedPartition resolve_partition(const ChannelPartition& partition,
                                    const std::vector<std::string>& channels,
                                    std::size_t min_size = 2);

// B x (P+Q) matrix: X columns then Y columns.
Matrix select_partition_columns(const Matrix& panel, const ResolvedPartition& resolved);

// Throws ValidationError naming the first duplicate label.
void check_unique_labels(const std::vector<std::string>& labels);

}  // namespace tailtopo
