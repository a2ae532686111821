#pragma once

#include "binica/types.hpp"

#include <vector>

namespace binica {

/// Optimal assignment of rows to columns of a square matrix: result[row] = column.
/// O(n^3) shortest augmenting path with potentials.
std::vector<int> hungarian_assign(const Matrix& score, bool maximize);

/// Mean |cosine| between columns of a_true and a_est under the best column
/// assignment. Throws DimensionError on shape mismatch and ParameterError on
/// a zero column.
double mean_cosine_similarity(const Matrix& a_true, const Matrix& a_est);

/// max(log10(1 - mcs), -7).
double log_error(double mcs);

}  // namespace binica
