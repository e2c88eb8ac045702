#pragma once

#include <span>
#include <string>
#include <vector>

#include "tailtopo/types.hpp"

namespace tailtopo {

enum class MarginFamily { frechet2, symmetric_pareto2 };

struct MarginSpec {
  MarginFamily family = MarginFamily::frechet2;
  double rank_offset = 0.0;  // plotting position: u = (r - offset) / (B - 2 offset + 1)

  double quantile(double u) const;

  // frechet2 | symmetric-pareto2 (underscore accepted too)
  static MarginFamily parse_family(const std::string& text);
  static std::string family_name(MarginFamily family);
};

// Frechet(2): (-log u)^{-1/2}.
double frechet2_quantile(double u);
// Unit symmetric Pareto(2): P(|Z| > z) = z^{-2}, z >= 1. The measure-zero point u = 1/2 maps to 0
// so that the transform is odd under rank reversal.
double symmetric_pareto2_quantile(double u);

// Average ranks (1-based) of a column; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Per-column rank transform onto the requested margin. Only ranks matter, so any strictly
// increasing map of a column leaves the output unchanged bit for bit.
// Throws ValidationError naming the channel when a column is constant.
Matrix rank_standardize(const Matrix& values, const MarginSpec& spec,
                        const std::vector<std::string>& channel_labels = {});
Matrix rank_standardize(const BandPeriodogramPanel& panel, const MarginSpec& spec);

}  // namespace tailtopo
