#pragma once

#include "binica/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace binica {

/// Binary observations tagged with a segment index.
///
/// Segments are 0-based in the API (the CSV format is 1-based). Rows are kept
/// in insertion order; x values are stored as 0/1 bytes.
class SegmentedBinaryDataset {
public:
    SegmentedBinaryDataset(int n, int n_u);

    /// Appends one observation. Throws DataError for a bad segment or length.
    void add(int segment, std::span<const std::uint8_t> x);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int n_u() const { return n_u_; }
    [[nodiscard]] std::size_t size() const { return segments_.size(); }
    [[nodiscard]] int segment(std::size_t row) const { return segments_[row]; }
    [[nodiscard]] std::uint8_t value(std::size_t row, int i) const {
        return values_[row * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)];
    }
    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t r) const {
        return {values_.data() + r * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
    }

    /// Number of rows in each segment.
    [[nodiscard]] std::vector<std::size_t> segment_sizes() const;

    /// Throws DataError naming the first segment without observations.
    void require_nonempty_segments() const;

    /// c(x) per segment, indexed by assignment mask (bit i holds x_i). n <= 20.
    [[nodiscard]] std::vector<std::vector<double>> assignment_counts() const;

private:
    int n_;
    int n_u_;
    std::vector<int> segments_;
    std::vector<std::uint8_t> values_;
};

}  // namespace binica
