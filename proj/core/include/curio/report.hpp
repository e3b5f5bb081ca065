#pragma once

// Report emission: aggregates the metrics.csv files of a run directory
// (either a single run or one seed_<n> subdirectory per seed) into SVG
// learning curves with a min/max band across seeds and a plain-text
// summary of best-over-training scores.

#include <string>
#include <vector>

namespace curio {

struct ReportPaths {
    std::string return_curve;
    std::string rooms_curve;
    std::string summary;
};

// Writes return_curve.svg, rooms_curve.svg, and summary.txt into run_dir.
// Accepts run_dir/metrics.csv or run_dir/seed_*/metrics.csv; throws
// UsageError when neither exists.
ReportPaths emit_report(const std::string& run_dir);

} // namespace curio
