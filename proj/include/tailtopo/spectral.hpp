#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tailtopo/types.hpp"

namespace tailtopo {

// d(a) = A^{-1/2} sum_{t=1..A} x_t exp(-i 2 pi a t / A), a = 0..A-1.
// The phase origin is block-local (t = 1 is the first sample of the block).
std::vector<std::complex<double>> local_dft(std::span<const double> block);

// |d(a)|^2 for a = 0..A-1.
std::vector<double> local_periodogram(std::span<const double> block);

// Fourier bins a in 1..floor(A/2) with SR * a / A in (lo, hi]. DC is never included.
std::vector<std::size_t> band_bins(const BandSpec& band, std::size_t block_length,
                                   double sampling_rate_hz);

std::size_t block_length_for(double block_seconds, double sampling_rate_hz);

struct BandPeriodogramOptions {
  // Subtract each block's mean before transforming. Only bin 0 changes, so band values are
  // unaffected up to rounding; recorded in the panel metadata.
  bool detrend_block_mean = false;
};

// Mean local periodogram over the band's bins, per disjoint block of length A.
// Trailing samples that do not fill a block are dropped.
BandPeriodogramPanel band_periodogram(const SignalPanel& panel, const BandSpec& band,
                                      std::size_t block_length,
                                      const BandPeriodogramOptions& options = {});

}  // namespace tailtopo
