#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "emlaw/backend.hpp"
#include "emlaw/pipeline.hpp"
#include "emlaw/regression.hpp"
#include "emlaw/sampler.hpp"

namespace emlaw {

class Tokenizer;

enum class Statistic { Intercept, Slope };

std::string_view to_string(Statistic s) noexcept;
Statistic parse_statistic(std::string_view name);

struct EmbediConfig {
    Statistic statistic = Statistic::Intercept;
    double tau_k = 0.0;
    double tau_m = 0.15;
    std::uint64_t min_samples = 1500;
    std::uint32_t prompt_len = 100;
    std::uint32_t answer_len = 50;

    void validate() const;
    std::uint32_t sequence_len() const noexcept { return prompt_len + answer_len; }
    double threshold() const noexcept { return statistic == Statistic::Intercept ? tau_k : tau_m; }
};

// Intercept thresholds tuned per model family: "pythia" -> 0, "olmo2" -> 3.
std::optional<double> preset_tau_k(std::string_view family);

// Member (1) iff the chosen statistic strictly exceeds its threshold.
int decide(const RegressionReport& report, const EmbediConfig& cfg);

struct EmbediVerdict {
    int label = 0;
    Statistic statistic = Statistic::Intercept;
    double value = 0.0;
    double threshold = 0.0;
    EmLawReport evidence;
    std::size_t eligible_documents = 0;
};

// Samples min_samples windows from the suspect documents, runs the level-set
// pipeline against `backend` and thresholds the fitted line. Throws
// InsufficientSuspectData when fewer than min_samples documents can supply a
// window; regression failures propagate without a verdict.
EmbediVerdict infer_membership(std::span<const Document> suspect, const Backend& backend,
                               Tokenizer& tokenizer, const EmbediConfig& cfg,
                               const GenerationConfig& generation, std::int64_t seed,
                               const AnalysisOptions& analysis = {}, std::size_t concurrency = 8);

}  // namespace emlaw
