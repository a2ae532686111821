#include "binica/dataset.hpp"

#include "binica/error.hpp"

#include <string>

namespace binica {

SegmentedBinaryDataset::SegmentedBinaryDataset(int n, int n_u) : n_(n), n_u_(n_u) {
    if (n < 1 || n_u < 1) {
        throw DataError("dataset: n and n_u must be positive");
    }
}

void SegmentedBinaryDataset::add(int segment, std::span<const std::uint8_t> x) {
    if (segment < 0 || segment >= n_u_) {
        throw DataError("dataset: segment " + std::to_string(segment + 1) + " outside [1, " +
                        std::to_string(n_u_) + "]");
    }
    if (x.size() != static_cast<std::size_t>(n_)) {
        throw DataError("dataset: expected " + std::to_string(n_) + " values, got " +
                        std::to_string(x.size()));
    }
    for (const std::uint8_t v : x) {
        if (v > 1) {
            throw DataError("dataset: values must be 0 or 1");
        }
    }
    segments_.push_back(segment);
    values_.insert(values_.end(), x.begin(), x.end());
}

std::vector<std::size_t> SegmentedBinaryDataset::segment_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(n_u_), 0);
    for (const int s : segments_) {
        ++sizes[static_cast<std::size_t>(s)];
    }
    return sizes;
}

void SegmentedBinaryDataset::require_nonempty_segments() const {
    const auto sizes = segment_sizes();
    for (std::size_t u = 0; u < sizes.size(); ++u) {
        if (sizes[u] == 0) {
            throw DataError("dataset: segment " + std::to_string(u + 1) + " has no observations");
        }
    }
}

std::vector<std::vector<double>> SegmentedBinaryDataset::assignment_counts() const {
    if (n_ > 20) {
        throw DimensionError("assignment_counts: n = " + std::to_string(n_) + " exceeds 20");
    }
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(n_u_),
                                            std::vector<double>(std::size_t{1} << n_, 0.0));
    for (std::size_t r = 0; r < size(); ++r) {
        unsigned mask = 0;
        for (int i = 0; i < n_; ++i) {
            if (value(r, i) != 0) {
                mask |= 1U << i;
            }
        }
        counts[static_cast<std::size_t>(segments_[r])][mask] += 1.0;
    }
    return counts;
}

}  // namespace binica
