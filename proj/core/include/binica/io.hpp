#pragma once

#include "binica/blica.hpp"
#include "binica/dataset.hpp"
#include "binica/fit_result.hpp"
#include "binica/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace binica::io {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// {format_version, n, n_z, n_u, mixing (nested rows), segment_means, segment_sds}.
/// Reading also accepts mixing as a flat row-major array.
Json model_to_json(const BicaModel& model);
BicaModel model_from_json(const Json& doc);

/// CSV with header `segment,x1,...,xn`; segment is 1-based. When n_u is not
/// given it is the largest segment index. Parse errors carry line numbers.
void write_dataset_csv(std::ostream& out, const SegmentedBinaryDataset& data);
SegmentedBinaryDataset read_dataset_csv(std::istream& in, std::optional<int> n_u = std::nullopt);

Json fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const Json& doc);

/// Throws DataError describing the first schema violation.
void validate_fit_result_json(const Json& doc);

Json pairwise_stats_to_json(const PairwiseStats& stats);
PairwiseStats pairwise_stats_from_json(const Json& doc);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

void write_model(const std::filesystem::path& path, const BicaModel& model);
BicaModel read_model(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const SegmentedBinaryDataset& data);
SegmentedBinaryDataset read_dataset(const std::filesystem::path& path);

}  // namespace binica::io
