#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tailtopo/ctd.hpp"
#include "tailtopo/types.hpp"

namespace tailtopo {

// One row of nonnegative features per subject.
struct FeatureStack {
  std::vector<std::string> subjects;
  Matrix features;  // N x D
};

// Row n = (|lambda1|', |lambda2|') of subject n.
FeatureStack stack_tail_topologies(const std::vector<std::pair<std::string, CtdSolution>>& solutions);

struct FcmOptions {
  int clusters = 2;
  double fuzziness = 2.0;  // m in (1, 3)
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;  // on max |delta U|
  int restarts = 10;
  double cutoff = 0.7;
};

struct MembershipMatrix {
  Matrix u;        // N x S, rows sum to 1
  Matrix centers;  // S x D
  double fuzziness = 0.0;
  std::vector<double> objective_trace;
  std::vector<int> hard_labels;   // 1-based argmax, ties -> lowest index
  std::vector<bool> fuzzy_flags;  // max_s U_ns < cutoff
  double cutoff = 0.7;
  int iterations = 0;
  bool converged = false;
  int restart = 0;  // index of the retained restart

  double objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

// U_ns = 1 / sum_s' (d_ns^2 / d_ns'^2)^{1/(m-1)}, evaluated in log space. A point sitting exactly
// on one or more centers belongs to them alone (split equally when several coincide).
Matrix fcm_memberships(const Matrix& features, const Matrix& centers, double m);
// Weighted means sum_n U_ns^m x_n / sum_n U_ns^m.
Matrix fcm_centers(const Matrix& features, const Matrix& u, double m);
double fcm_objective(const Matrix& features, const Matrix& u, const Matrix& centers, double m);

// Alternating updates from seeded uniform-random memberships; keeps the restart with the
// lowest final objective.
MembershipMatrix fuzzy_cmeans(const FeatureStack& stack, const FcmOptions& options);

struct LabelAssignment {
  std::vector<int> hard_labels;
  std::vector<bool> fuzzy_flags;
};
LabelAssignment assign_labels(const Matrix& u, double cutoff);

struct ConfusionMatrix {
  std::array<std::array<int, 2>, 2> m{};  // rows: truth, columns: predicted
  int n_total = 0;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& truth);
// max(M11 + M22, M12 + M21) / N, invariant to swapping the two predicted labels.
double accuracy(const ConfusionMatrix& confusion);
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

struct CcaResult {
  double rho = 0.0;        // squared top canonical correlation
  Vector lambda0;          // (lambda1', lambda2')', covariance-root images of the canonical directions
  CtdSolution solution;    // the same construction as CTD, on sample covariances
};

// Classical CCA on the raw panel's sample covariance (B > D required).
CcaResult cca_canonical_vectors(const Matrix& panel, const ResolvedPartition& partition);

}  // namespace tailtopo
