#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "tailtopo/types.hpp"

namespace tailtopo {

// Tail pairwise dependence matrix estimated from one standardized panel.
struct Tpdm {
  Matrix matrix;                      // D x D, symmetric by construction
  std::vector<std::string> channels;  // column labels of `matrix`
  ChannelPartition partition;         // X/Y split used by the canonical analysis
  double threshold_quantile = 0.0;    // q
  std::size_t exceedance_count = 0;   // c = #{b : ||Z_b|| > r}
  double radius = 0.0;                // r, empirical q-quantile of the radii
  std::size_t num_blocks = 0;
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return matrix.rows(); }
};

// Gamma_XX, Gamma_YY, Gamma_XY of a joint matrix under a resolved partition.
struct TpdmBlocks {
  Matrix xx;
  Matrix yy;
  Matrix xy;
};

TpdmBlocks split_blocks(const Matrix& gamma, const ResolvedPartition& partition);

// Inverse of the empirical CDF: the ceil(qB)-th smallest value.
double empirical_quantile(std::vector<double> values, double q);

struct TpdmOptions {
  std::vector<std::string> channels;  // defaults to c1..cD
  std::optional<ChannelPartition> partition;  // defaults to halves of `channels`
};

// Gamma_jk = (D/c) sum_b Z_jb Z_kb / ||Z_b||^2 * 1{||Z_b|| > r}, r the empirical q-quantile of
// the L2 radii. Requires B >= 50 and q in (0.5, 1). Rows with zero norm never exceed.
Tpdm estimate_tpdm(const Matrix& panel, double q, const TpdmOptions& options = {});

// Off-diagonal of the 2 x 2 estimate. Under symmetric margins the value can be negative.
double edm(const Matrix& pair_panel, double q);

void write_tpdm(const std::filesystem::path& path, const Tpdm& tpdm);
std::string format_tpdm(const Tpdm& tpdm);
// Reads the D x D CSV with `# q=`, `# c=`, `# r=` and optional `# partition=` comments.
// The matrix must be square, finite, and exactly symmetric.
Tpdm load_tpdm(const std::filesystem::path& path);

}  // namespace tailtopo
