#pragma once

#include "binica/blica.hpp"
#include "binica/fullmle.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace binica::experiments {

enum class SweepKind { id_table, identifiability, finite_sample, scaling };

/// Accepts "id-table", "identifiability", "finite-sample", "scaling".
SweepKind parse_kind(std::string_view name);
std::string_view to_string(SweepKind kind);

/// heuristic_count over the grid: result[a][b] for n_u = n_us[a], n = ns[b].
std::vector<std::vector<long>> id_table(const std::vector<int>& ns, const std::vector<int>& n_us);

/// Tab-separated grid with a header row of n values and one row per n_u.
void write_id_table(std::ostream& out, const std::vector<int>& ns, const std::vector<int>& n_us);

struct SweepGrid {
    std::vector<int> n;
    std::vector<int> n_u;
    std::vector<int> n_z;      // empty: n_z = n
    std::vector<int> samples;  // per segment; ignored by identifiability
    int replicates = 5;
    std::vector<std::string> methods{"blica"};
};

struct SweepConfig {
    SweepKind kind = SweepKind::identifiability;
    SweepGrid grid;
    Seed seed = 1;
    BlicaConfig blica;
    FullMleConfig fullmle;
    unsigned workers = 0;
};

struct SweepRow {
    std::string kind;
    int n = 0;
    int n_z = 0;
    int n_u = 0;
    int samples = 0;  // 0 for exact distributions
    int replicate = 0;
    Seed seed = 0;
    std::string method;
    std::string status;  // optimizer status, or "failed"
    double mcs = 0.0;
    double log_error = 0.0;
    double objective = 0.0;
    double pairwise_seconds = 0.0;
    double optimize_seconds = 0.0;
    double total_seconds = 0.0;
    std::string error;
};

/// Runs every (cell, replicate, method) task of the grid. Model and data
/// seeds are derived from config.seed and the cell coordinates, so rows do
/// not depend on scheduling. Failures become rows with status "failed".
/// Rows are returned in grid order. Not valid for SweepKind::id_table.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

void write_sweep_header(std::ostream& out);
void write_sweep_row(std::ostream& out, const SweepRow& row);

}  // namespace binica::experiments
