#include "curio/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "curio/errors.hpp"

namespace curio {

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string csv_escape(const std::string& cell) {
    const bool needs_quotes = cell.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string csv_row(std::span<const std::string> cells) {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ",";
        out += csv_escape(cells[i]);
    }
    out += "\n";
    return out;
}

int CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("csv: no column named " + name);
    return static_cast<int>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false; // distinguishes a trailing empty record from a real empty cell

    auto end_cell = [&] {
        record.push_back(cell);
        cell.clear();
        cell_started = false;
    };
    auto end_record = [&] {
        end_cell();
        records.push_back(record);
        record.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            cell_started = true;
            break;
        case ',':
            end_cell();
            cell_started = true; // a comma implies a following cell
            break;
        case '\n':
            end_record();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break; // CRLF: LF ends the record
            end_record();
            break;
        default:
            cell += c;
            cell_started = true;
            break;
        }
    }
    if (in_quotes) throw UsageError("csv: unterminated quoted field");
    if (cell_started || !record.empty()) end_record();

    CsvTable table;
    if (!records.empty()) {
        table.header = records.front();
        table.rows.assign(records.begin() + 1, records.end());
    }
    return table;
}

Hns compute_hns(double agent, double human, double random) {
    if (human == random) {
        throw UsageError("normalized score: human and random reference scores coincide");
    }
    Hns h;
    h.hns = (agent - random) / (human - random);
    h.chns = std::min(std::max(h.hns, 0.0), 1.0);
    return h;
}

const std::vector<std::string> kScoreHeader = {
    "learner_step", "env_steps", "mean_return", "mean_length",
    "mean_rooms",   "max_rooms", "hns",         "chns"};

std::string score_row(const ScoreRecord& r) {
    const std::vector<std::string> cells = {
        std::to_string(r.learner_step), std::to_string(r.env_steps),
        format_double(r.mean_return),   format_double(r.mean_length),
        format_double(r.mean_rooms),    format_double(r.max_rooms),
        format_double(r.hns),           format_double(r.chns)};
    return csv_row(cells);
}

namespace {
double parse_cell(const std::string& s) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw UsageError("csv: cannot parse numeric cell '" + s + "'");
    }
    return out;
}
} // namespace

std::vector<ScoreRecord> parse_score_rows(const CsvTable& table) {
    const int step_col = table.column("learner_step");
    const int env_col = table.column("env_steps");
    const int ret_col = table.column("mean_return");
    const int len_col = table.column("mean_length");
    const int rooms_col = table.column("mean_rooms");
    const int maxrooms_col = table.column("max_rooms");
    const int hns_col = table.column("hns");
    const int chns_col = table.column("chns");

    std::vector<ScoreRecord> out;
    for (const auto& row : table.rows) {
        if (!row.empty() && row[0] == "truncated") break;
        if (row.size() != table.header.size()) {
            throw UsageError("csv: row width does not match the header");
        }
        ScoreRecord r;
        r.learner_step = static_cast<long long>(parse_cell(row[static_cast<size_t>(step_col)]));
        r.env_steps = static_cast<long long>(parse_cell(row[static_cast<size_t>(env_col)]));
        r.mean_return = parse_cell(row[static_cast<size_t>(ret_col)]);
        r.mean_length = parse_cell(row[static_cast<size_t>(len_col)]);
        r.mean_rooms = parse_cell(row[static_cast<size_t>(rooms_col)]);
        r.max_rooms = parse_cell(row[static_cast<size_t>(maxrooms_col)]);
        r.hns = parse_cell(row[static_cast<size_t>(hns_col)]);
        r.chns = parse_cell(row[static_cast<size_t>(chns_col)]);
        out.push_back(r);
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw UsageError("read failed: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw UsageError("write failed: " + path);
}

} // namespace curio
