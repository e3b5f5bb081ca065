#pragma once

// Metrics plumbing: RFC-4180 CSV reading/writing with LF line endings,
// shortest-round-trip double formatting, and normalized-score computation
// against human/random reference points.

#include <span>
#include <string>
#include <vector>

namespace curio {

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// Quotes a cell when it contains a comma, quote, or line break; embedded
// quotes are doubled.
std::string csv_escape(const std::string& cell);

// One CSV record: escaped cells joined by commas plus a trailing LF.
std::string csv_row(std::span<const std::string> cells);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name; throws UsageError when absent.
    int column(const std::string& name) const;
};

// Parses RFC-4180 text (quoted fields may contain commas, quotes, and
// newlines; CRLF is accepted and normalized). First record is the header.
// Throws UsageError on an unterminated quoted field.
CsvTable parse_csv(const std::string& text);

struct Hns {
    double hns = 0.0;
    double chns = 0.0; // hns clipped to [0, 1]
};

// Normalized score (agent - random) / (human - random). Throws UsageError
// when the reference points coincide.
Hns compute_hns(double agent, double human, double random);

// Per-evaluation-point scores recorded in metrics.csv.
struct ScoreRecord {
    long long learner_step = 0;
    long long env_steps = 0;
    double mean_return = 0.0;
    double mean_length = 0.0;
    double mean_rooms = 0.0;
    double max_rooms = 0.0;
    double hns = 0.0;
    double chns = 0.0;
};

extern const std::vector<std::string> kScoreHeader;

std::string score_row(const ScoreRecord& r);

// Reads the rows of a metrics CSV back into records, stopping at a
// truncation marker row if present.
std::vector<ScoreRecord> parse_score_rows(const CsvTable& table);

// Whole-file helpers; both throw UsageError on IO failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace curio
