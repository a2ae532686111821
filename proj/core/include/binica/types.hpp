#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace binica {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Probabilities or weights of the four cells of a 2x2 binary table,
/// indexed by 2 * x_i + x_j: {00, 01, 10, 11}.
using PairCells = std::array<double, 4>;

using Seed = std::uint64_t;

}  // namespace binica
