#include "tailtopo/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"

namespace tailtopo {

BandSpec BandSpec::standard(BandName name) {
  switch (name) {
    case BandName::delta: return {name, 0.0, 4.0};
    case BandName::theta: return {name, 4.0, 8.0};
    case BandName::alpha: return {name, 8.0, 12.0};
    case BandName::beta: return {name, 12.0, 30.0};
    case BandName::gamma: return {name, 30.0, 50.0};
    case BandName::none: return {name, 0.0, 0.0};
    case BandName::custom: break;
  }
  throw InvalidArgument("custom bands need explicit limits");
}

BandSpec BandSpec::custom(double lo_hz, double hi_hz) {
  if (!(lo_hz >= 0.0) || !(hi_hz > lo_hz)) {
    throw InvalidArgument("band needs 0 <= lo < hi, got (" + csv::format_double(lo_hz) + ", " +
                          csv::format_double(hi_hz) + "]");
  }
  return {BandName::custom, lo_hz, hi_hz};
}

BandSpec BandSpec::parse(const std::string& text) {
  if (text == "delta") return standard(BandName::delta);
  if (text == "theta") return standard(BandName::theta);
  if (text == "alpha") return standard(BandName::alpha);
  if (text == "beta") return standard(BandName::beta);
  if (text == "gamma") return standard(BandName::gamma);
  if (text == "none") return standard(BandName::none);
  const auto dash = text.find('-', 1);
  if (dash != std::string::npos) {
    try {
      return custom(std::stod(text.substr(0, dash)), std::stod(text.substr(dash + 1)));
    } catch (const std::logic_error&) {
    }
  }
  throw InvalidArgument("unknown band '" + text + "' (delta|theta|alpha|beta|gamma|none|lo-hi)");
}

std::string BandSpec::tag() const {
  switch (name) {
    case BandName::delta: return "delta";
    case BandName::theta: return "theta";
    case BandName::alpha: return "alpha";
    case BandName::beta: return "beta";
    case BandName::gamma: return "gamma";
    case BandName::none: return "none";
    case BandName::custom: break;
  }
  return csv::format_double(lo_hz) + "-" + csv::format_double(hi_hz);
}

namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex planner_mutex;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW could not create a plan");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex);
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }

  // Unnormalized bins 0..n/2 with the t = 0 phase origin.
  std::span<const fftw_complex> run() {
    fftw_execute(plan_);
    return {out_.get(), n_ / 2 + 1};
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::vector<std::complex<double>> local_dft(std::span<const double> block) {
  const std::size_t n = block.size();
  if (n < 2) throw InvalidArgument("local_dft needs a block of at least 2 samples");
  RealFft fft(n);
  std::copy(block.begin(), block.end(), fft.input());
  const auto half = fft.run();

  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<std::complex<double>> out(n);
  for (std::size_t a = 0; a <= n / 2; ++a) {
    // shift the phase origin from t = 0 to t = 1
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(n);
    const std::complex<double> v(half[a][0], half[a][1]);
    out[a] = v * std::polar(scale, angle);
  }
  for (std::size_t a = n / 2 + 1; a < n; ++a) out[a] = std::conj(out[n - a]);
  return out;
}

std::vector<double> local_periodogram(std::span<const double> block) {
  const auto d = local_dft(block);
  std::vector<double> out(d.size());
  for (std::size_t a = 0; a < d.size(); ++a) out[a] = std::norm(d[a]);
  return out;
}

std::vector<std::size_t> band_bins(const BandSpec& band, std::size_t block_length,
                                   double sampling_rate_hz) {
  std::vector<std::size_t> bins;
  const double a_len = static_cast<double>(block_length);
  for (std::size_t a = 1; a <= block_length / 2; ++a) {
    const double f = sampling_rate_hz * static_cast<double>(a) / a_len;
    if (f > band.lo_hz && f <= band.hi_hz) bins.push_back(a);
  }
  return bins;
}

std::size_t block_length_for(double block_seconds, double sampling_rate_hz) {
  const double a = std::round(block_seconds * sampling_rate_hz);
  if (!(a >= 2.0)) throw InvalidArgument("block must span at least 2 samples");
  return static_cast<std::size_t>(a);
}

BandPeriodogramPanel band_periodogram(const SignalPanel& panel, const BandSpec& band,
                                      std::size_t block_length,
                                      const BandPeriodogramOptions& options) {
  if (block_length < 2) throw InvalidArgument("block length must be at least 2");
  if (band.name == BandName::none) throw InvalidArgument("band 'none' has no frequencies");
  const double sr = panel.sampling_rate_hz;
  if (band.hi_hz > sr / 2.0) {
    throw InvalidArgument("band " + band.tag() + " exceeds the Nyquist frequency " +
                          csv::format_double(sr / 2.0) + " Hz");
  }
  const auto bins = band_bins(band, block_length, sr);
  if (bins.empty()) {
    throw InvalidArgument("band " + band.tag() + " contains no Fourier bins for A=" +
                          std::to_string(block_length) + " at " + csv::format_double(sr) + " Hz");
  }
  const auto n_blocks = static_cast<std::size_t>(panel.num_samples()) / block_length;
  if (n_blocks == 0) {
    throw InvalidArgument("signal of " + std::to_string(panel.num_samples()) +
                          " samples is shorter than one block of " + std::to_string(block_length));
  }

  BandPeriodogramPanel out;
  out.subject_id = panel.subject_id;
  out.band = band;
  out.channels = panel.channels;
  out.block_length = block_length;
  out.sampling_rate_hz = sr;
  out.detrended = options.detrend_block_mean;
  out.values.resize(static_cast<Eigen::Index>(n_blocks), panel.num_channels());

  RealFft fft(block_length);
  const double norm = 1.0 / (static_cast<double>(block_length) * static_cast<double>(bins.size()));
  for (Eigen::Index j = 0; j < panel.num_channels(); ++j) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      double* in = fft.input();
      const auto start = static_cast<Eigen::Index>(b * block_length);
      for (std::size_t t = 0; t < block_length; ++t) {
        in[t] = panel.samples(start + static_cast<Eigen::Index>(t), j);
      }
      if (options.detrend_block_mean) {
        double mean = 0.0;
        for (std::size_t t = 0; t < block_length; ++t) mean += in[t];
        mean /= static_cast<double>(block_length);
        for (std::size_t t = 0; t < block_length; ++t) in[t] -= mean;
      }
      const auto spec = fft.run();
      double sum = 0.0;
      for (auto a : bins) sum += spec[a][0] * spec[a][0] + spec[a][1] * spec[a][1];
      out.values(static_cast<Eigen::Index>(b), j) = sum * norm;
    }
  }
  return out;
}

}  // namespace tailtopo
