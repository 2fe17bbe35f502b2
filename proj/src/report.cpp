#include "emlaw/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "emlaw/error.hpp"
#include "emlaw/util.hpp"

namespace emlaw {

ordered_json regression_to_json(const RegressionReport& r) {
    ordered_json j;
    j["intercept"] = r.intercept;
    j["slope"] = r.slope;
    j["pearson_r"] = r.pearson_r;
    j["n_points"] = r.n_points;
    return j;
}

ordered_json levels_to_json(std::span<const LevelSetReport> levels) {
    ordered_json arr = ordered_json::array();
    for (const auto& l : levels) {
        ordered_json j;
        j["e"] = l.e;
        j["count"] = l.count;
        j["unique_tokens"] = l.unique_tokens;
        j["entropy_bits"] = l.entropy_bits;
        j["normalized"] = l.normalized;
        arr.push_back(std::move(j));
    }
    return arr;
}

namespace {

ordered_json counts_to_json(const RecordCounts& c) {
    ordered_json j;
    j["total"] = c.total;
    j["filtered"] = c.filtered;
    j["scored"] = c.scored;
    j["unscored"] = c.unscored;
    return j;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

}  // namespace

ordered_json emlaw_report_to_json(const EmLawReport& report, const ordered_json& config) {
    ordered_json j;
    j["config"] = config;
    j["levels"] = levels_to_json(report.levels);
    j["regression"] = regression_to_json(report.regression);
    if (report.regression_excluding_zero) {
        j["regression_excluding_zero"] = regression_to_json(*report.regression_excluding_zero);
    }
    j["normalization_note"] = report.normalization_note;
    j["counts"] = counts_to_json(report.counts);
    j["generation_failures"] = report.generation_failures;
    j["warnings"] = report.warnings;
    return j;
}

std::string levels_csv(std::span<const LevelSetReport> levels) {
    std::string out = "e,count,unique_tokens,entropy_bits,normalized\n";
    for (const auto& l : levels) {
        out += std::to_string(l.e) + "," + std::to_string(l.count) + "," +
               std::to_string(l.unique_tokens) + "," + format_double(l.entropy_bits) + "," +
               format_double(l.normalized) + "\n";
    }
    return out;
}

std::vector<LevelSetReport> parse_levels_csv(std::string_view csv) {
    std::vector<LevelSetReport> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (lineno == 1) {
            if (line != "e,count,unique_tokens,entropy_bits,normalized") {
                throw Error(ErrorCode::Parse, "unexpected scatter CSV header: " + line);
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 5) {
            throw Error(ErrorCode::Parse, "scatter CSV line " + std::to_string(lineno) + " needs 5 cells");
        }
        try {
            LevelSetReport l;
            l.e = static_cast<std::uint32_t>(std::stoul(cells[0]));
            l.count = std::stoull(cells[1]);
            l.unique_tokens = std::stoull(cells[2]);
            l.entropy_bits = std::stod(cells[3]);
            l.normalized = std::stod(cells[4]);
            out.push_back(l);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Parse, "scatter CSV line " + std::to_string(lineno) + " is malformed");
        }
    }
    return out;
}

std::string instancewise_csv(std::span<const InstancePoint> points) {
    std::string out = "id,distance,entropy_bits,support\n";
    for (const auto& p : points) {
        out += std::to_string(p.id) + "," + std::to_string(p.distance) + "," +
               format_double(p.entropy_bits) + "," + std::to_string(p.support) + "\n";
    }
    return out;
}

ordered_json instancewise_to_json(const InstancewiseResult& result, const ordered_json& config) {
    ordered_json j;
    j["config"] = config;
    j["n_points"] = result.points.size();
    if (result.regression) {
        j["regression"] = regression_to_json(*result.regression);
    } else {
        j["regression"] = nullptr;
        j["regression_error"] = result.regression_error;
    }
    j["counts"] = counts_to_json(result.counts);
    j["generation_failures"] = result.generation_failures;
    return j;
}

ordered_json gibberish_report_to_json(const GibberishReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json j;
        j["set_name"] = r.set_name;
        j["instances"] = r.instances;
        j["unique_T"] = r.unique_tokens;
        j["unique_C"] = r.unique_chars;
        j["total_C"] = r.total_chars;
        j["entropy_T"] = r.entropy_tokens;
        j["entropy_C"] = r.entropy_chars;
        j["normalized_T"] = r.normalized_tokens;
        j["normalized_C"] = r.normalized_chars;
        rows.push_back(std::move(j));
    }
    ordered_json j;
    j["rows"] = std::move(rows);
    j["warnings"] = report.warnings;
    return j;
}

ordered_json verdict_to_json(const EmbediVerdict& verdict, std::string_view evidence_path) {
    ordered_json j;
    j["label"] = verdict.label;
    j["statistic"] = std::string(to_string(verdict.statistic));
    j["value"] = verdict.value;
    j["threshold"] = verdict.threshold;
    j["evidence_path"] = std::string(evidence_path);
    return j;
}

std::string render_svg(std::span<const ScatterPoint> points, const std::optional<RegressionReport>& fit,
                       const PlotLabels& labels, std::string_view description) {
    constexpr double kWidth = 640, kHeight = 480;
    constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    if (!points.empty()) {
        auto [xmin, xmax] = std::minmax_element(points.begin(), points.end(),
                                                [](const auto& a, const auto& b) { return a.x < b.x; });
        auto [ymin, ymax] = std::minmax_element(points.begin(), points.end(),
                                                [](const auto& a, const auto& b) { return a.y < b.y; });
        x_lo = std::min(0.0, xmin->x);
        x_hi = std::max(x_lo + 1.0, xmax->x);
        y_lo = std::min(0.0, ymin->y);
        y_hi = std::max(y_lo + 1.0, ymax->y * 1.05);
    }
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

    std::ostringstream svg;
    svg << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
        << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(" font-family="sans-serif" font-size="12">)"
        << "\n";
    if (!description.empty()) {
        svg << "<desc>" << xml_escape(description) << "</desc>\n";
    }
    svg << R"(<rect width="100%" height="100%" fill="white"/>)" << "\n";
    svg << R"(<text x=")" << kWidth / 2 << R"(" y="24" text-anchor="middle" font-size="15">)"
        << xml_escape(labels.title) << "</text>\n";

    // axes and ticks
    svg << R"(<g stroke="black" stroke-width="1">)"
        << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop + plot_h << R"(" x2=")" << kLeft + plot_w
        << R"(" y2=")" << kTop + plot_h << R"("/>)"
        << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop << R"(" x2=")" << kLeft << R"(" y2=")"
        << kTop + plot_h << R"("/></g>)" << "\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / kTicks;
        const double yv = y_lo + (y_hi - y_lo) * i / kTicks;
        svg << R"(<text x=")" << fixed(px(xv)) << R"(" y=")" << kTop + plot_h + 18
            << R"(" text-anchor="middle">)" << fixed(xv, 1) << "</text>";
        svg << R"(<text x=")" << kLeft - 8 << R"(" y=")" << fixed(py(yv) + 4)
            << R"(" text-anchor="end">)" << fixed(yv, 1) << "</text>\n";
    }
    svg << R"(<text x=")" << kLeft + plot_w / 2 << R"(" y=")" << kHeight - 18
        << R"(" text-anchor="middle">)" << xml_escape(labels.x_axis) << "</text>\n";
    svg << R"svg(<text transform="translate(18 )svg" << kTop + plot_h / 2
        << R"svg() rotate(-90)" text-anchor="middle">)svg" << xml_escape(labels.y_axis) << "</text>\n";

    svg << R"(<g fill="#1f77b4">)";
    for (const auto& p : points) {
        svg << R"(<circle cx=")" << fixed(px(p.x)) << R"(" cy=")" << fixed(py(p.y)) << R"(" r="3"/>)";
    }
    svg << "</g>\n";

    if (fit) {
        const double y0 = fit->intercept + fit->slope * x_lo;
        const double y1 = fit->intercept + fit->slope * x_hi;
        svg << R"(<line stroke="#d62728" stroke-width="1.5" x1=")" << fixed(px(x_lo)) << R"(" y1=")"
            << fixed(py(y0)) << R"(" x2=")" << fixed(px(x_hi)) << R"(" y2=")" << fixed(py(y1)) << R"("/>)"
            << "\n";
        svg << R"(<text x=")" << kLeft + 10 << R"(" y=")" << kTop + 14 << R"(" fill="#d62728">)"
            << "y = " << fixed(fit->intercept, 3) << " + " << fixed(fit->slope, 4)
            << " x, r = " << fixed(fit->pearson_r, 3) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace emlaw
