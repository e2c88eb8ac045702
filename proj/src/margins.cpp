#include "tailtopo/margins.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"

namespace tailtopo {

double frechet2_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  return 1.0 / std::sqrt(-std::log(u));
}

double symmetric_pareto2_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("quantile level must lie in (0,1)");
  if (u < 0.5) return -1.0 / std::sqrt(2.0 * u);
  if (u > 0.5) return 1.0 / std::sqrt(2.0 * (1.0 - u));
  return 0.0;
}

double MarginSpec::quantile(double u) const {
  return family == MarginFamily::frechet2 ? frechet2_quantile(u) : symmetric_pareto2_quantile(u);
}

MarginFamily MarginSpec::parse_family(const std::string& text) {
  if (text == "frechet2") return MarginFamily::frechet2;
  if (text == "symmetric-pareto2" || text == "symmetric_pareto2") {
    return MarginFamily::symmetric_pareto2;
  }
  throw InvalidArgument("unknown margin '" + text + "' (frechet2|symmetric-pareto2)");
}

std::string MarginSpec::family_name(MarginFamily family) {
  return family == MarginFamily::frechet2 ? "frechet2" : "symmetric-pareto2";
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

Matrix rank_standardize(const Matrix& values, const MarginSpec& spec,
                        const std::vector<std::string>& channel_labels) {
  if (!(spec.rank_offset >= 0.0 && spec.rank_offset < 1.0)) {
    throw InvalidArgument("rank_offset must lie in [0,1)");
  }
  const Eigen::Index b = values.rows();
  Matrix out(b, values.cols());
  const double denom = static_cast<double>(b) - 2.0 * spec.rank_offset + 1.0;
  std::vector<double> column(static_cast<std::size_t>(b));
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < b; ++i) column[static_cast<std::size_t>(i)] = values(i, j);
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    if (b == 0 || *lo == *hi) {
      const auto name = static_cast<std::size_t>(j) < channel_labels.size()
                            ? "'" + channel_labels[static_cast<std::size_t>(j)] + "'"
                            : "#" + std::to_string(j + 1);
      throw ValidationError("channel " + name + " is constant; rank transform undefined");
    }
    const auto ranks = average_ranks(column);
    for (Eigen::Index i = 0; i < b; ++i) {
      const double u = (ranks[static_cast<std::size_t>(i)] - spec.rank_offset) / denom;
      out(i, j) = spec.quantile(u);
    }
  }
  return out;
}

Matrix rank_standardize(const BandPeriodogramPanel& panel, const MarginSpec& spec) {
  return rank_standardize(panel.values, spec, panel.channels);
}

}  // namespace tailtopo
