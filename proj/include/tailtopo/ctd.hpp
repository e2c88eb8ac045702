#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tailtopo/tpdm.hpp"
#include "tailtopo/types.hpp"

namespace tailtopo {

struct ConditionReport {
  double min_eig_xx = 0.0;
  double min_eig_yy = 0.0;
  double ridge_xx = 0.0;
  double ridge_yy = 0.0;
  double top_gap = 0.0;     // spectrum[0] - spectrum[1]; +inf when only one eigenvalue
  bool degenerate = false;  // top_gap < 1e-8
};

// Canonical tail dependence and its maximizers.
//   tau     = max (gamma' G_XY beta)^2 s.t. gamma' G_XX gamma = beta' G_YY beta = 1
//   lambda1 = G_XX^{1/2} gamma*, lambda2 = G_YY^{1/2} beta*  (unit vectors: the tail-topology)
struct CtdSolution {
  double tau = 0.0;
  Vector gamma_star;
  Vector beta_star;
  Vector lambda1;
  Vector lambda2;
  std::vector<double> spectrum;  // descending eigenvalues of the symmetric form, min(P,Q) kept
  ConditionReport condition;
};

// Generic block solver shared by CTD (TPDM blocks) and classical CCA (covariance blocks).
// Works on the symmetric form M = Sxx^{-1/2} Sxy Syy^{-1} Syx Sxx^{-1/2}, whose nonzero
// eigenvalues coincide with those of Sxx^{-1} Sxy Syy^{-1} Syx.
CtdSolution solve_canonical(const Matrix& sxx, const Matrix& syy, const Matrix& sxy);

// Requires P, Q >= 2 and an exactly symmetric matrix.
CtdSolution solve_ctd(const Matrix& gamma, const ResolvedPartition& partition);
CtdSolution solve_ctd(const Tpdm& tpdm);

// Column 0: gamma*' X_b, column 1: beta*' Y_b.
Matrix extremal_scores(const Matrix& panel, const CtdSolution& solution,
                       const ResolvedPartition& partition);

struct OracleResult {
  double tau = 0.0;
  Vector gamma;
  Vector beta;
  double seconds = 0.0;
  int restarts = 0;
};

struct OracleOptions {
  int max_iterations = 20000;
  double min_step = 1e-12;
};

// Direct maximization of (gamma' G_XY beta)^2 on the constraint ellipsoids by projected
// gradient ascent with step backtracking, best of `restarts` seeded random starts. Uses the
// same ridge policy as the eigen path but no eigendecomposition of the cross structure.
OracleResult numeric_ctd_oracle(const Matrix& gamma, const ResolvedPartition& partition,
                                int restarts, std::uint64_t seed, const OracleOptions& options = {});
OracleResult numeric_ctd_oracle(const Tpdm& tpdm, int restarts, std::uint64_t seed,
                                const OracleOptions& options = {});

}  // namespace tailtopo
