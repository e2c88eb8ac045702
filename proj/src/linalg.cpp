#include "tailtopo/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"

namespace tailtopo::linalg {

SymEigen sym_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  // Eigen returns ascending order
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

Matrix sym_sqrt(const Matrix& a) {
  const auto e = sym_eigen(a);
  const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * root.asDiagonal() * e.vectors.transpose();
}

Matrix sym_inv_sqrt(const Matrix& a) {
  const auto e = sym_eigen(a);
  if (!(e.values.minCoeff() > 0.0)) throw NumericalError("inverse square root of a singular matrix");
  const Vector inv_root = e.values.cwiseSqrt().cwiseInverse();
  return e.vectors * inv_root.asDiagonal() * e.vectors.transpose();
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return es.eigenvalues()(0);
}

Ridge regularize(const Matrix& a, const char* name) {
  const auto n = a.rows();
  Ridge r;
  r.min_eig = min_eigenvalue(a);
  const double scale = a.trace() / static_cast<double>(n);
  const double floor = 1e-8 * scale;
  r.matrix = a;
  r.min_eig_after = r.min_eig;
  if (scale > 0.0 && r.min_eig >= floor) return r;

  if (scale > 0.0) {
    for (double factor : {1e-8, 1e-6, 1e-4}) {
      r.ridge = factor * scale;
      r.matrix = a + r.ridge * Matrix::Identity(n, n);
      r.min_eig_after = min_eigenvalue(r.matrix);
      if (r.min_eig_after >= floor) return r;
    }
    if (r.min_eig_after >= 1e-10) return r;
  }
  throw NumericalError(std::string(name) + " is singular: smallest eigenvalue " +
                       csv::format_double(r.min_eig) + ", after ridge " + csv::format_double(r.ridge) +
                       " still " + csv::format_double(r.min_eig_after));
}

void fix_sign(Vector& v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best)) + 1e-12) best = i;
  }
  if (v(best) < 0.0) v = -v;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    }
  }
  return true;
}

}  // namespace tailtopo::linalg
