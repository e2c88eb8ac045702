#include "tailtopo/tpdm.hpp"

#include <algorithm>
#include <cmath>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"

namespace tailtopo {

TpdmBlocks split_blocks(const Matrix& gamma, const ResolvedPartition& partition) {
  const auto p = static_cast<Eigen::Index>(partition.p());
  const auto q = static_cast<Eigen::Index>(partition.q());
  TpdmBlocks b{Matrix(p, p), Matrix(q, q), Matrix(p, q)};
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto gi = partition.x_index[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < p; ++k) b.xx(i, k) = gamma(gi, partition.x_index[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 0; k < q; ++k) b.xy(i, k) = gamma(gi, partition.y_index[static_cast<std::size_t>(k)]);
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto gi = partition.y_index[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < q; ++k) b.yy(i, k) = gamma(gi, partition.y_index[static_cast<std::size_t>(k)]);
  }
  return b;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

Tpdm estimate_tpdm(const Matrix& panel, double q, const TpdmOptions& options) {
  const Eigen::Index b = panel.rows();
  const Eigen::Index d = panel.cols();
  if (!(q > 0.5 && q < 1.0)) throw InvalidArgument("tail quantile q must lie in (0.5, 1)");
  if (b < 50) throw InvalidArgument("TPDM estimation needs at least 50 blocks, got " + std::to_string(b));
  if (d < 1) throw InvalidArgument("panel has no channels");
  if (!panel.allFinite()) throw ValidationError("panel contains non-finite values");

  Tpdm out;
  out.channels = options.channels;
  if (out.channels.empty()) {
    for (Eigen::Index j = 0; j < d; ++j) out.channels.push_back("c" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(out.channels.size()) != d) {
    throw InvalidArgument("channel label count does not match panel width");
  }
  out.partition = options.partition.value_or(ChannelPartition::halves(out.channels));
  out.threshold_quantile = q;
  out.num_blocks = static_cast<std::size_t>(b);

  std::vector<double> sq_norm(static_cast<std::size_t>(b));
  std::vector<double> radii(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    const double s = panel.row(i).squaredNorm();
    sq_norm[static_cast<std::size_t>(i)] = s;
    radii[static_cast<std::size_t>(i)] = std::sqrt(s);
  }
  out.radius = empirical_quantile(radii, q);

  Matrix acc = Matrix::Zero(d, d);
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    if (!(radii[static_cast<std::size_t>(i)] > out.radius)) continue;
    ++c;
    const double inv = 1.0 / sq_norm[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double zj = panel(i, j);
      for (Eigen::Index k = j; k < d; ++k) acc(j, k) += zj * panel(i, k) * inv;
    }
  }
  if (c == 0) {
    throw ValidationError("no radial exceedances above r=" + csv::format_double(out.radius) +
                          " at q=" + csv::format_double(q));
  }
  out.exceedance_count = c;
  const double dd = static_cast<double>(d);
  const double cc = static_cast<double>(c);
  out.matrix.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      const double v = acc(j, k) * dd / cc;
      out.matrix(j, k) = v;
      out.matrix(k, j) = v;
    }
  }
  if (static_cast<Eigen::Index>(c) < d) {
    out.warnings.push_back("only " + std::to_string(c) + " exceedances for D=" + std::to_string(d) +
                           "; TPDM is rank-deficient");
  }
  return out;
}

double edm(const Matrix& pair_panel, double q) {
  if (pair_panel.cols() != 2) throw InvalidArgument("edm expects exactly two columns");
  return estimate_tpdm(pair_panel, q).matrix(0, 1);
}

std::string format_tpdm(const Tpdm& tpdm) {
  std::vector<std::string> comments{
      "q=" + csv::format_double(tpdm.threshold_quantile),
      "c=" + std::to_string(tpdm.exceedance_count),
      "r=" + csv::format_double(tpdm.radius),
      "partition=" + tpdm.partition.to_string(),
  };
  if (tpdm.num_blocks) comments.push_back("blocks=" + std::to_string(tpdm.num_blocks));
  return csv::format_matrix(comments, tpdm.channels, tpdm.matrix);
}

void write_tpdm(const std::filesystem::path& path, const Tpdm& tpdm) {
  csv::write_text(path, format_tpdm(tpdm));
}

Tpdm load_tpdm(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  check_unique_labels(table.header);
  const auto d = static_cast<Eigen::Index>(table.header.size());
  if (static_cast<Eigen::Index>(table.rows.size()) != d) {
    throw ParseError(path.string() + ": TPDM must be square (" + std::to_string(d) + " columns, " +
                         std::to_string(table.rows.size()) + " rows)",
                     table.header_line);
  }
  Tpdm t;
  t.channels = table.header;
  t.matrix.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = csv::parse_double(row.fields[static_cast<std::size_t>(j)], row.line);
      if (!std::isfinite(v)) throw ValidationError("non-finite TPDM entry at line " + std::to_string(row.line));
      t.matrix(i, j) = v;
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (t.matrix(i, j) != t.matrix(j, i)) {
        throw InvalidArgument(path.string() + ": TPDM is not symmetric at (" + t.channels[static_cast<std::size_t>(i)] +
                              ", " + t.channels[static_cast<std::size_t>(j)] + ")");
      }
    }
  }
  if (auto v = csv::comment_value(table, "q"); !v.empty()) t.threshold_quantile = std::stod(v);
  if (auto v = csv::comment_value(table, "c"); !v.empty()) t.exceedance_count = std::stoul(v);
  if (auto v = csv::comment_value(table, "r"); !v.empty()) t.radius = std::stod(v);
  if (auto v = csv::comment_value(table, "blocks"); !v.empty()) t.num_blocks = std::stoul(v);
  if (auto v = csv::comment_value(table, "partition"); !v.empty()) {
    t.partition = ChannelPartition::parse(v);
  } else {
    t.partition = ChannelPartition::halves(t.channels);
  }
  return t;
}

}  // namespace tailtopo
