#pragma once

#include "binica/types.hpp"

#include <optional>

namespace binica::num {

/// Lower-triangular L with L L^T = a, or nullopt if `a` is not positive definite.
std::optional<Matrix> try_cholesky(const Matrix& a);

/// Like try_cholesky but throws FactorizationError.
Matrix cholesky(const Matrix& a);

struct SymEigen {
    Vector values;   // descending
    Matrix vectors;  // column k pairs with values[k]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
SymEigen sym_eigen(const Matrix& a);

/// Ratio of the extreme singular values of a (rows >= cols).
double condition_number(const Matrix& a);

}  // namespace binica::num
