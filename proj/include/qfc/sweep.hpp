#pragma once

// Scenario evaluation and parameter sweeps producing result tables.

#include "qfc/config.hpp"
#include "qfc/table.hpp"

#include <vector>

namespace qfc::sweep {

/// Sweep grid; both endpoints are reproduced exactly and a reversed range
/// yields the same values in reverse order.
std::vector<double> grid(const config::SweepSpec& spec);

/// Columns produced by the configured operation (without a sweep column).
std::vector<table::Column> columns(const config::ScenarioConfig& cfg);

/// Number of rows one evaluation of the operation produces.
std::size_t rows_per_point(const config::ScenarioConfig& cfg);

/// Evaluates the operation once. `jobs` bounds inner parallelism.
std::vector<std::vector<double>> evaluate(const config::ScenarioConfig& cfg, int jobs = 1);

/// Single evaluation with provenance; errors propagate.
table::ResultTable run_scenario(const config::ScenarioConfig& cfg, int jobs = 0);

/// Evaluates every sweep point concurrently. A failing point yields NaN rows
/// tagged with the error; the run continues. Row order follows the grid.
table::ResultTable run_sweep(const config::ScenarioConfig& cfg, int jobs = 0);

namespace serial {
table::ResultTable run_sweep(const config::ScenarioConfig& cfg);
}

} // namespace qfc::sweep
