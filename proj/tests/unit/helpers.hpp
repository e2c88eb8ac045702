#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tailtopo/types.hpp"

namespace testutil {

using tailtopo::Matrix;
using tailtopo::Vector;

inline std::filesystem::path tmp_dir(const std::string& name) {
  auto p = std::filesystem::path(TAILTOPO_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// O(A^2) DFT straight from the definition, t = 1..A.
inline std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const auto a = x.size();
  const double pi = std::acos(-1.0);
  std::vector<std::complex<double>> out(a);
  for (std::size_t k = 0; k < a; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 1; t <= a; ++t) {
      const double ang = -2.0 * pi * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(a);
      s += x[t - 1] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s / std::sqrt(static_cast<double>(a));
  }
  return out;
}

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Random full-rank PSD matrix, exactly symmetric.
inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index d) {
  const Matrix a = gaussian(rng, d, d + 3);
  Matrix g = a * a.transpose() / static_cast<double>(d + 3);
  return 0.5 * (g + g.transpose());
}

inline Matrix frechet_panel(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = u(rng);
      while (v <= 0.0) v = u(rng);
      m(i, j) = 1.0 / std::sqrt(-std::log(v));
    }
  return m;
}

inline tailtopo::ResolvedPartition split(int p, int q) {
  tailtopo::ResolvedPartition r;
  for (int i = 0; i < p; ++i) r.x_index.push_back(i);
  for (int i = 0; i < q; ++i) r.y_index.push_back(p + i);
  return r;
}

inline std::vector<std::string> labels(int d, const std::string& prefix = "c") {
  std::vector<std::string> out;
  for (int i = 0; i < d; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

}  // namespace testutil
