#include "curio/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "curio/errors.hpp"
#include "curio/metrics.hpp"

namespace curio {
namespace {

namespace fs = std::filesystem;

struct Band {
    std::vector<double> x, mean, lo, hi;
};

// Aligns the series row-by-row up to the shortest one (a truncated seed
// shortens the band rather than distorting it).
Band aggregate(const std::vector<std::vector<ScoreRecord>>& seeds,
               double ScoreRecord::* field) {
    size_t n = seeds.front().size();
    for (const auto& s : seeds) n = std::min(n, s.size());
    Band b;
    for (size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        double lo = seeds.front()[i].*field;
        double hi = lo;
        for (const auto& s : seeds) {
            const double v = s[i].*field;
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        b.x.push_back(static_cast<double>(seeds.front()[i].env_steps));
        b.mean.push_back(sum / static_cast<double>(seeds.size()));
        b.lo.push_back(lo);
        b.hi.push_back(hi);
    }
    return b;
}

std::string svg_number(double v) {
    // Fixed short form keeps the files small; exactness does not matter
    // for pixel coordinates.
    char buf[32];
    snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    if (std::abs(v) >= 1000.0 && std::fmod(v, 1000.0) == 0.0) {
        return format_double(v / 1000.0) + "k";
    }
    char buf[32];
    snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string svg_chart(const Band& b, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
    const double width = 640, height = 400;
    const double ml = 62, mr = 18, mt = 34, mb = 46;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double x_max = 1.0, y_min = 0.0, y_max = 1.0;
    if (!b.x.empty()) {
        x_max = std::max(1.0, *std::max_element(b.x.begin(), b.x.end()));
        y_min = *std::min_element(b.lo.begin(), b.lo.end());
        y_max = *std::max_element(b.hi.begin(), b.hi.end());
        if (y_max <= y_min) y_max = y_min + 1.0;
        const double pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;
    }
    const auto px = [&](double x) { return ml + pw * (x / x_max); };
    const auto py = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + title + "</text>\n";

    // axes and ticks
    s += "<line x1=\"" + svg_number(ml) + "\" y1=\"" + svg_number(mt + ph) + "\" x2=\"" +
         svg_number(ml + pw) + "\" y2=\"" + svg_number(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + svg_number(ml) + "\" y1=\"" + svg_number(mt) + "\" x2=\"" +
         svg_number(ml) + "\" y2=\"" + svg_number(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_max * i / 4.0;
        const double fy = y_min + (y_max - y_min) * i / 4.0;
        s += "<line x1=\"" + svg_number(px(fx)) + "\" y1=\"" + svg_number(mt + ph) + "\" x2=\"" +
             svg_number(px(fx)) + "\" y2=\"" + svg_number(mt + ph + 4) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + svg_number(px(fx)) + "\" y=\"" + svg_number(mt + ph + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
             tick_label(fx) + "</text>\n";
        s += "<line x1=\"" + svg_number(ml - 4) + "\" y1=\"" + svg_number(py(fy)) + "\" x2=\"" +
             svg_number(ml) + "\" y2=\"" + svg_number(py(fy)) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + svg_number(ml - 8) + "\" y=\"" + svg_number(py(fy) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
             tick_label(fy) + "</text>\n";
    }
    s += "<text x=\"" + svg_number(ml + pw / 2) + "\" y=\"" + svg_number(height - 8) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
    s += "<text x=\"16\" y=\"" + svg_number(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
         "16 " + svg_number(mt + ph / 2) + ")\">" + y_label + "</text>\n";

    if (!b.x.empty()) {
        // min/max band across seeds, then the mean line on top
        std::string poly;
        for (size_t i = 0; i < b.x.size(); ++i) {
            poly += svg_number(px(b.x[i])) + "," + svg_number(py(b.hi[i])) + " ";
        }
        for (size_t i = b.x.size(); i-- > 0;) {
            poly += svg_number(px(b.x[i])) + "," + svg_number(py(b.lo[i])) + " ";
        }
        s += "<polygon points=\"" + poly + "\" fill=\"#4c72b0\" fill-opacity=\"0.25\" "
             "stroke=\"none\"/>\n";
        std::string line;
        for (size_t i = 0; i < b.x.size(); ++i) {
            line += svg_number(px(b.x[i])) + "," + svg_number(py(b.mean[i])) + " ";
        }
        s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#4c72b0\" "
             "stroke-width=\"2\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace

ReportPaths emit_report(const std::string& run_dir) {
    std::vector<std::pair<std::string, std::string>> found; // (label, csv path)
    const fs::path root(run_dir);
    if (fs::exists(root / "metrics.csv")) {
        found.emplace_back("run", (root / "metrics.csv").string());
    } else if (fs::is_directory(root)) {
        std::map<std::string, std::string> ordered;
        for (const auto& e : fs::directory_iterator(root)) {
            if (!e.is_directory()) continue;
            const std::string name = e.path().filename().string();
            if (name.rfind("seed_", 0) != 0) continue;
            const fs::path csv = e.path() / "metrics.csv";
            if (fs::exists(csv)) ordered[name] = csv.string();
        }
        for (const auto& [label, path] : ordered) found.emplace_back(label, path);
    }
    if (found.empty()) {
        throw UsageError("no metrics.csv found under " + run_dir);
    }

    std::vector<std::vector<ScoreRecord>> seeds;
    std::vector<std::string> labels;
    for (const auto& [label, path] : found) {
        auto records = parse_score_rows(parse_csv(read_text_file(path)));
        if (records.empty()) continue; // header-only file: nothing to plot
        seeds.push_back(std::move(records));
        labels.push_back(label);
    }
    if (seeds.empty()) {
        throw UsageError("metrics files under " + run_dir + " contain no evaluation rows");
    }

    const Band ret = aggregate(seeds, &ScoreRecord::mean_return);
    const Band rooms = aggregate(seeds, &ScoreRecord::mean_rooms);

    ReportPaths paths;
    paths.return_curve = (root / "return_curve.svg").string();
    paths.rooms_curve = (root / "rooms_curve.svg").string();
    paths.summary = (root / "summary.txt").string();

    write_text_file(paths.return_curve,
                    svg_chart(ret, "Evaluation return (mean, min/max across seeds)",
                              "environment steps", "mean return"));
    write_text_file(paths.rooms_curve,
                    svg_chart(rooms, "Rooms visited per evaluation episode (mean, min/max)",
                              "environment steps", "mean rooms visited"));

    // Best-over-training summary: one line per seed plus aggregates.
    std::string summary;
    std::vector<double> best_scores, best_chns, final_rooms;
    for (size_t k = 0; k < seeds.size(); ++k) {
        double best = seeds[k].front().mean_return;
        double chns_at_best = seeds[k].front().chns;
        for (const auto& r : seeds[k]) {
            if (r.mean_return > best) {
                best = r.mean_return;
                chns_at_best = r.chns;
            }
        }
        best_scores.push_back(best);
        best_chns.push_back(chns_at_best);
        final_rooms.push_back(seeds[k].back().mean_rooms);
        summary += labels[k] + ": agent_score = " + format_double(best) +
                   ", chns = " + format_double(chns_at_best) +
                   ", final_mean_rooms = " + format_double(seeds[k].back().mean_rooms) +
                   ", eval_points = " + std::to_string(seeds[k].size()) + "\n";
    }
    const auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    summary += "agent_score_mean = " + format_double(mean_of(best_scores)) + "\n";
    summary += "agent_score_median = " + format_double(median_of(best_scores)) + "\n";
    summary += "chns_mean = " + format_double(mean_of(best_chns)) + "\n";
    summary += "final_mean_rooms_median = " + format_double(median_of(final_rooms)) + "\n";
    write_text_file(paths.summary, summary);
    return paths;
}

} // namespace curio
