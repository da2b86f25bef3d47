#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mfstop/experiments/config.hpp"
#include "mfstop/experiments/csv.hpp"

namespace mfstop {

// An experiment is a list of independent cells; each cell yields rows that
// begin with the cell index and carry the seeds used. Running a cell again
// with the seeds read back from its rows reproduces them bit for bit.
struct Experiment {
    std::string name;
    std::vector<std::string> header;
    std::size_t cells = 0;
    std::function<std::vector<Row>(std::size_t cell, const Seeds& seeds)> run_cell;
};

std::vector<std::string> experiment_names();
Experiment make_experiment(const std::string& name, const Config& config);

// All cells over `threads` workers, rows in cell order.
Table run_experiment(const Experiment& experiment, const Seeds& seeds, int threads);

Table run_simulate(const Config& config);
Table run_chaos_experiment(const Config& config);
Table run_value_sweep(const Config& config);
Table run_equivalence_check(const Config& config);
Table run_optimize(const Config& config);

struct VerifyOutcome {
    std::size_t cell = 0;
    std::size_t rows_checked = 0;
    bool identical = false;
    std::string detail;
};

// Re-runs the cell of `row` using the seeds recorded in that row and compares
// the formatted output with every recorded row of the cell.
VerifyOutcome verify_row(const Experiment& experiment, const std::vector<std::vector<std::string>>& csv,
                         std::size_t row);

// For tree-oracle tables: relative gap column non-increasing in depth.
bool gap_trend_nonincreasing(const Table& table);

}  // namespace mfstop
