#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emlaw/embedi.hpp"
#include "emlaw/pipeline.hpp"
#include "emlaw/regression.hpp"

namespace emlaw {

using ordered_json = nlohmann::ordered_json;

ordered_json regression_to_json(const RegressionReport& r);
ordered_json levels_to_json(std::span<const LevelSetReport> levels);

// {"config", "levels", "regression", ["regression_excluding_zero"],
//  "normalization_note", "counts", "generation_failures", "warnings"}
ordered_json emlaw_report_to_json(const EmLawReport& report, const ordered_json& config);

// Header: e,count,unique_tokens,entropy_bits,normalized
std::string levels_csv(std::span<const LevelSetReport> levels);
std::vector<LevelSetReport> parse_levels_csv(std::string_view csv);

// Header: id,distance,entropy_bits,support
std::string instancewise_csv(std::span<const InstancePoint> points);

ordered_json instancewise_to_json(const InstancewiseResult& result, const ordered_json& config);
ordered_json gibberish_report_to_json(const GibberishReport& report);

// {"label", "statistic", "value", "threshold", "evidence_path"}
ordered_json verdict_to_json(const EmbediVerdict& verdict, std::string_view evidence_path);

struct PlotLabels {
    std::string title = "Entropy vs. memorization score";
    std::string x_axis = "memorization score e";
    std::string y_axis = "entropy (bits)";
};

// Scatter with an optional fitted line. `description` lands in <desc>.
std::string render_svg(std::span<const ScatterPoint> points, const std::optional<RegressionReport>& fit,
                       const PlotLabels& labels = {}, std::string_view description = {});

}  // namespace emlaw
