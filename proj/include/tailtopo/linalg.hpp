#pragma once

#include "tailtopo/types.hpp"

namespace tailtopo::linalg {

// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct SymEigen {
  Vector values;
  Matrix vectors;  // column k pairs with values(k)
};

SymEigen sym_eigen(const Matrix& a);

// Principal square root and inverse square root via the eigendecomposition; eigenvalues are
// floored at zero for the square root. The inverse root requires all eigenvalues > 0.
Matrix sym_sqrt(const Matrix& a);
Matrix sym_inv_sqrt(const Matrix& a);

double min_eigenvalue(const Matrix& a);

// Outcome of the ridge policy applied to one covariance-like block.
struct Ridge {
  Matrix matrix;              // the block actually used, a + ridge * I
  double min_eig = 0.0;       // before regularization
  double ridge = 0.0;         // 0 when untouched
  double min_eig_after = 0.0;
};

// If lambda_min < 1e-8 * trace/n, add eps*I for eps escalating over {1e-8, 1e-6, 1e-4} * trace/n.
// Throws NumericalError when the block is still singular (lambda_min < 1e-10) at the largest ridge.
Ridge regularize(const Matrix& a, const char* name);

// Makes the largest-magnitude entry positive (first index wins among ties within 1e-12).
void fix_sign(Vector& v);

bool is_symmetric(const Matrix& a, double tol = 0.0);

}  // namespace tailtopo::linalg
