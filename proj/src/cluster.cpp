#include "tailtopo/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tailtopo/error.hpp"
#include "tailtopo/rng.hpp"

namespace tailtopo {

FeatureStack stack_tail_topologies(const std::vector<std::pair<std::string, CtdSolution>>& solutions) {
  if (solutions.empty()) throw InvalidArgument("no solutions to stack");
  const auto p = solutions.front().second.lambda1.size();
  const auto q = solutions.front().second.lambda2.size();
  FeatureStack stack;
  stack.features.resize(static_cast<Eigen::Index>(solutions.size()), p + q);
  for (std::size_t n = 0; n < solutions.size(); ++n) {
    const auto& [id, s] = solutions[n];
    if (s.lambda1.size() != p || s.lambda2.size() != q) {
      throw InvalidArgument("subject '" + id + "' has tail-topology dimensions (" +
                            std::to_string(s.lambda1.size()) + ", " + std::to_string(s.lambda2.size()) +
                            "), expected (" + std::to_string(p) + ", " + std::to_string(q) + ")");
    }
    stack.subjects.push_back(id);
    const auto row = static_cast<Eigen::Index>(n);
    stack.features.row(row).head(p) = s.lambda1.cwiseAbs().transpose();
    stack.features.row(row).tail(q) = s.lambda2.cwiseAbs().transpose();
  }
  return stack;
}

Matrix fcm_memberships(const Matrix& features, const Matrix& centers, double m) {
  const auto n = features.rows();
  const auto s = centers.rows();
  Matrix u(n, s);
  std::vector<double> d2(static_cast<std::size_t>(s));
  std::vector<double> logw(static_cast<std::size_t>(s));
  const double power = 1.0 / (m - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int hits = 0;
    for (Eigen::Index k = 0; k < s; ++k) {
      d2[static_cast<std::size_t>(k)] = (features.row(i) - centers.row(k)).squaredNorm();
      if (d2[static_cast<std::size_t>(k)] == 0.0) ++hits;
    }
    if (hits > 0) {
      for (Eigen::Index k = 0; k < s; ++k) {
        u(i, k) = d2[static_cast<std::size_t>(k)] == 0.0 ? 1.0 / hits : 0.0;
      }
      continue;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < s; ++k) {
      logw[static_cast<std::size_t>(k)] = -power * std::log(d2[static_cast<std::size_t>(k)]);
      top = std::max(top, logw[static_cast<std::size_t>(k)]);
    }
    double total = 0.0;
    for (Eigen::Index k = 0; k < s; ++k) {
      const double w = std::exp(logw[static_cast<std::size_t>(k)] - top);
      u(i, k) = w;
      total += w;
    }
    u.row(i) /= total;
  }
  return u;
}

Matrix fcm_centers(const Matrix& features, const Matrix& u, double m) {
  const Matrix w = u.array().pow(m).matrix();
  Matrix centers = w.transpose() * features;  // S x D
  for (Eigen::Index k = 0; k < centers.rows(); ++k) {
    const double mass = w.col(k).sum();
    if (mass > 0.0) {
      centers.row(k) /= mass;
    }
  }
  return centers;
}

double fcm_objective(const Matrix& features, const Matrix& u, const Matrix& centers, double m) {
  double j = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      j += std::pow(u(i, k), m) * (features.row(i) - centers.row(k)).squaredNorm();
    }
  }
  return j;
}

namespace {

MembershipMatrix fcm_single(const Matrix& x, const FcmOptions& o, std::uint64_t stream_seed) {
  const auto n = x.rows();
  const auto s = static_cast<Eigen::Index>(o.clusters);
  Engine eng(stream_seed);
  Matrix u(n, s);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < s; ++k) u(i, k) = uniform_open(eng);
    u.row(i) /= u.row(i).sum();
  }

  MembershipMatrix out;
  out.fuzziness = o.fuzziness;
  Matrix centers;
  for (int it = 0; it < o.max_iter; ++it) {
    centers = fcm_centers(x, u, o.fuzziness);
    out.objective_trace.push_back(fcm_objective(x, u, centers, o.fuzziness));
    Matrix next = fcm_memberships(x, centers, o.fuzziness);
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    out.iterations = it + 1;
    if (change < o.tol) {
      out.converged = true;
      break;
    }
  }
  centers = fcm_centers(x, u, o.fuzziness);
  out.objective_trace.push_back(fcm_objective(x, u, centers, o.fuzziness));
  out.u = std::move(u);
  out.centers = std::move(centers);
  return out;
}

}  // namespace

MembershipMatrix fuzzy_cmeans(const FeatureStack& stack, const FcmOptions& o) {
  const auto& x = stack.features;
  if (o.clusters < 2) throw InvalidArgument("need at least 2 clusters");
  if (o.clusters > x.rows()) {
    throw InvalidArgument("more clusters (" + std::to_string(o.clusters) + ") than subjects (" +
                          std::to_string(x.rows()) + ")");
  }
  if (!(o.fuzziness > 1.0 && o.fuzziness < 3.0)) throw InvalidArgument("fuzziness m must lie in (1, 3)");
  if (!(o.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (o.max_iter < 1 || o.restarts < 1) throw InvalidArgument("max_iter and restarts must be >= 1");
  if (!x.allFinite()) throw InvalidArgument("features contain non-finite values");

  MembershipMatrix best;
  for (int r = 0; r < o.restarts; ++r) {
    auto run = fcm_single(x, o, derive_seed(o.seed, Stage::fcm_init, static_cast<std::uint64_t>(r)));
    run.restart = r;
    if (r == 0 || run.objective() < best.objective()) best = std::move(run);
  }
  auto labels = assign_labels(best.u, o.cutoff);
  best.hard_labels = std::move(labels.hard_labels);
  best.fuzzy_flags = std::move(labels.fuzzy_flags);
  best.cutoff = o.cutoff;
  return best;
}

LabelAssignment assign_labels(const Matrix& u, double cutoff) {
  if (u.cols() < 1) throw InvalidArgument("membership matrix has no clusters");
  if (!(cutoff > 1.0 / static_cast<double>(u.cols()) && cutoff <= 1.0)) {
    throw InvalidArgument("cutoff must lie in (1/S, 1]");
  }
  LabelAssignment out;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < u.cols(); ++k) {
      if (u(i, k) > u(i, best)) best = k;
    }
    out.hard_labels.push_back(static_cast<int>(best) + 1);
    out.fuzzy_flags.push_back(u(i, best) < cutoff);
  }
  return out;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("label vectors differ in length");
  if (predicted.empty()) throw InvalidArgument("accuracy of zero subjects");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if (p < 1 || p > 2 || t < 1 || t > 2) {
      throw InvalidArgument("two-cluster accuracy needs labels in {1, 2}");
    }
    ++c.m[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p - 1)];
    ++c.n_total;
  }
  return c;
}

double accuracy(const ConfusionMatrix& c) {
  if (c.n_total == 0) throw InvalidArgument("accuracy of zero subjects");
  const int diag = c.m[0][0] + c.m[1][1];
  const int anti = c.m[0][1] + c.m[1][0];
  return static_cast<double>(std::max(diag, anti)) / static_cast<double>(c.n_total);
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  return accuracy(confusion_matrix(predicted, truth));
}

CcaResult cca_canonical_vectors(const Matrix& panel, const ResolvedPartition& partition) {
  const auto d = static_cast<Eigen::Index>(partition.p() + partition.q());
  if (partition.p() < 1 || partition.q() < 1) throw InvalidArgument("CCA needs P, Q >= 1");
  if (panel.rows() <= d) throw InvalidArgument("CCA needs more blocks than channels");
  if (!panel.allFinite()) throw ValidationError("panel contains non-finite values");

  Matrix z(panel.rows(), d);
  Eigen::Index c = 0;
  for (auto j : partition.x_index) z.col(c++) = panel.col(j);
  for (auto j : partition.y_index) z.col(c++) = panel.col(j);
  const Matrix centered = z.rowwise() - z.colwise().mean();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(panel.rows() - 1);

  const auto p = static_cast<Eigen::Index>(partition.p());
  const auto q = static_cast<Eigen::Index>(partition.q());
  CcaResult r;
  r.solution = solve_canonical(cov.topLeftCorner(p, p), cov.bottomRightCorner(q, q),
                               cov.topRightCorner(p, q));
  r.rho = r.solution.tau;
  r.lambda0.resize(d);
  r.lambda0 << r.solution.lambda1, r.solution.lambda2;
  return r;
}

}  // namespace tailtopo
