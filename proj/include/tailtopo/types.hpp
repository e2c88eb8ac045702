#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tailtopo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Multichannel recording, one column per channel (T x D).
struct SignalPanel {
  std::string subject_id;
  std::vector<std::string> channels;
  Matrix samples;  // T x D
  double sampling_rate_hz = 0.0;

  Eigen::Index num_samples() const { return samples.rows(); }
  Eigen::Index num_channels() const { return samples.cols(); }
};

enum class BandName { delta, theta, alpha, beta, gamma, custom, none };

// Frequency interval (lo_hz, hi_hz], half-open as the standard EEG bands are defined.
struct BandSpec {
  BandName name = BandName::none;
  double lo_hz = 0.0;
  double hi_hz = 0.0;

  static BandSpec standard(BandName name);
  static BandSpec custom(double lo_hz, double hi_hz);
  // Accepts delta|theta|alpha|beta|gamma|none or "lo-hi" for a custom interval.
  static BandSpec parse(const std::string& text);
  std::string tag() const;
};

// Band-aggregated local periodograms (B blocks x D channels).
struct BandPeriodogramPanel {
  std::string subject_id;
  BandSpec band;
  std::vector<std::string> channels;
  Matrix values;                // B x D
  std::size_t block_length = 0; // 0 when unknown (loaded from a file without metadata)
  double sampling_rate_hz = 0.0;
  bool detrended = false;

  Eigen::Index num_blocks() const { return values.rows(); }
  Eigen::Index num_channels() const { return values.cols(); }
};

// Split of the analyzed channels into the X and Y groups.
struct ChannelPartition {
  std::vector<std::string> x_channels;
  std::vector<std::string> y_channels;

  // "F3,F7:P3,P4" -> x = {F3,F7}, y = {P3,P4}.
  static ChannelPartition parse(const std::string& text);
  // First floor(D/2) channels form X, the rest Y.
  static ChannelPartition halves(const std::vector<std::string>& channels);
  std::string to_string() const;

  std::size_t p() const { return x_channels.size(); }
  std::size_t q() const { return y_channels.size(); }
};

// Column indices of X then Y within a panel, in partition-list order.
struct ResolvedPartition {
  std::vector<Eigen::Index> x_index;
  std::vector<Eigen::Index> y_index;

  std::size_t p() const { return x_index.size(); }
  std::size_t q() const { return y_index.size(); }
};

}  // namespace tailtopo
