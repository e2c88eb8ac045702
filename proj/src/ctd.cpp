#include "tailtopo/ctd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/linalg.hpp"
#include "tailtopo/rng.hpp"

namespace tailtopo {

namespace {

constexpr double kDegenerateGap = 1e-8;

bool lex_greater(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > b(i) + 1e-12) return true;
    if (a(i) < b(i) - 1e-12) return false;
  }
  return false;
}

// Top eigenvector with the sign convention; inside a degenerate top eigenspace the
// lexicographically largest sign-fixed basis vector wins.
Vector top_vector(const linalg::SymEigen& e) {
  Vector best = e.vectors.col(0);
  linalg::fix_sign(best);
  for (Eigen::Index k = 1; k < e.values.size(); ++k) {
    if (e.values(0) - e.values(k) >= kDegenerateGap) break;
    Vector v = e.vectors.col(k);
    linalg::fix_sign(v);
    if (lex_greater(v, best)) best = v;
  }
  return best;
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

CtdSolution solve_canonical(const Matrix& sxx, const Matrix& syy, const Matrix& sxy) {
  if (sxx.rows() != sxy.rows() || syy.rows() != sxy.cols() || sxx.rows() < 1 || syy.rows() < 1) {
    throw InvalidArgument("canonical blocks have inconsistent shapes");
  }
  CtdSolution s;
  const auto rx = linalg::regularize(sxx, "X block");
  const auto ry = linalg::regularize(syy, "Y block");
  s.condition.min_eig_xx = rx.min_eig;
  s.condition.min_eig_yy = ry.min_eig;
  s.condition.ridge_xx = rx.ridge;
  s.condition.ridge_yy = ry.ridge;

  const Matrix wx = linalg::sym_inv_sqrt(rx.matrix);
  const Matrix wy = linalg::sym_inv_sqrt(ry.matrix);
  const Matrix k = wx * sxy * wy;

  const auto ex = linalg::sym_eigen(symmetrized(k * k.transpose()));
  const auto keep = std::min(sxx.rows(), syy.rows());
  for (Eigen::Index i = 0; i < keep; ++i) s.spectrum.push_back(ex.values(i));
  s.tau = std::max(0.0, ex.values(0));
  s.condition.top_gap = ex.values.size() > 1 ? ex.values(0) - ex.values(1)
                                             : std::numeric_limits<double>::infinity();
  s.condition.degenerate = s.condition.top_gap < kDegenerateGap;

  s.lambda1 = top_vector(ex);
  // Pair lambda2 with lambda1 through K' lambda1 (a top eigenvector of K'K) so that a degenerate
  // spectrum still yields a matched canonical pair.
  Vector y = k.transpose() * s.lambda1;
  const double ny = y.norm();
  if (ny > 1e-10) {
    s.lambda2 = y / ny;
    linalg::fix_sign(s.lambda2);
  } else {
    s.lambda2 = top_vector(linalg::sym_eigen(symmetrized(k.transpose() * k)));
  }
  s.gamma_star = wx * s.lambda1;
  s.beta_star = wy * s.lambda2;
  return s;
}

CtdSolution solve_ctd(const Matrix& gamma, const ResolvedPartition& partition) {
  if (!linalg::is_symmetric(gamma)) throw InvalidArgument("TPDM must be symmetric");
  if (partition.p() < 2 || partition.q() < 2) {
    throw InvalidArgument("canonical tail dependence needs P, Q >= 2");
  }
  const auto blocks = split_blocks(gamma, partition);
  return solve_canonical(blocks.xx, blocks.yy, blocks.xy);
}

CtdSolution solve_ctd(const Tpdm& tpdm) {
  return solve_ctd(tpdm.matrix, resolve_partition(tpdm.partition, tpdm.channels));
}

Matrix extremal_scores(const Matrix& panel, const CtdSolution& solution,
                       const ResolvedPartition& partition) {
  if (solution.gamma_star.size() != static_cast<Eigen::Index>(partition.p()) ||
      solution.beta_star.size() != static_cast<Eigen::Index>(partition.q())) {
    throw InvalidArgument("solution does not match the partition sizes");
  }
  for (auto j : partition.x_index) {
    if (j < 0 || j >= panel.cols()) throw InvalidArgument("partition index outside the panel");
  }
  for (auto j : partition.y_index) {
    if (j < 0 || j >= panel.cols()) throw InvalidArgument("partition index outside the panel");
  }
  Matrix out = Matrix::Zero(panel.rows(), 2);
  for (std::size_t i = 0; i < partition.p(); ++i) {
    out.col(0) += solution.gamma_star(static_cast<Eigen::Index>(i)) * panel.col(partition.x_index[i]);
  }
  for (std::size_t i = 0; i < partition.q(); ++i) {
    out.col(1) += solution.beta_star(static_cast<Eigen::Index>(i)) * panel.col(partition.y_index[i]);
  }
  return out;
}

namespace {

Vector gaussian_vector(Engine& eng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open(eng)));
    const double t = 2.0 * std::numbers::pi * uniform_open(eng);
    v(i) = r * std::cos(t);
    if (i + 1 < n) v(i + 1) = r * std::sin(t);
  }
  return v;
}

// Component of `grad` tangent to the ellipsoid v' S v = 1 at v.
Vector tangent(const Vector& grad, const Vector& v, const Matrix& s) {
  const Vector n = s * v;
  return grad - (n.dot(grad) / n.squaredNorm()) * n;
}

// Scale onto {v : v' S v = 1}.
Vector to_ellipsoid(const Vector& v, const Matrix& s) {
  const double q = v.dot(s * v);
  return v / std::sqrt(q);
}

}  // namespace

OracleResult numeric_ctd_oracle(const Matrix& gamma, const ResolvedPartition& partition,
                                int restarts, std::uint64_t seed, const OracleOptions& options) {
  if (restarts < 1) throw InvalidArgument("oracle needs at least one restart");
  if (!linalg::is_symmetric(gamma)) throw InvalidArgument("TPDM must be symmetric");
  const auto t0 = std::chrono::steady_clock::now();
  const auto blocks = split_blocks(gamma, partition);
  const Matrix sxx = linalg::regularize(blocks.xx, "X block").matrix;
  const Matrix syy = linalg::regularize(blocks.yy, "Y block").matrix;
  const Matrix& c = blocks.xy;

  OracleResult best;
  best.restarts = restarts;
  best.tau = -1.0;
  for (int r = 0; r < restarts; ++r) {
    Engine eng(derive_seed(seed, Stage::oracle, static_cast<std::uint64_t>(r)));
    Vector g = to_ellipsoid(gaussian_vector(eng, sxx.rows()), sxx);
    Vector b = to_ellipsoid(gaussian_vector(eng, syy.rows()), syy);
    double inner = g.dot(c * b);
    double f = inner * inner;
    double step = 1.0;
    for (int it = 0; it < options.max_iterations && step > options.min_step; ++it) {
      const Vector grad_g = tangent(2.0 * inner * (c * b), g, sxx);
      const Vector grad_b = tangent(2.0 * inner * (c.transpose() * g), b, syy);
      const Vector g2 = to_ellipsoid(g + step * grad_g, sxx);
      const Vector b2 = to_ellipsoid(b + step * grad_b, syy);
      const double inner2 = g2.dot(c * b2);
      const double f2 = inner2 * inner2;
      if (f2 > f) {
        g = g2;
        b = b2;
        inner = inner2;
        f = f2;
        step = std::min(step * 2.0, 1e6);
      } else {
        step *= 0.5;
      }
    }
    if (f > best.tau) {
      best.tau = f;
      best.gamma = g;
      best.beta = b;
    }
  }
  best.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

OracleResult numeric_ctd_oracle(const Tpdm& tpdm, int restarts, std::uint64_t seed,
                                const OracleOptions& options) {
  return numeric_ctd_oracle(tpdm.matrix, resolve_partition(tpdm.partition, tpdm.channels),
                            restarts, seed, options);
}

}  // namespace tailtopo
