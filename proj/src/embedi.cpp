#include "emlaw/embedi.hpp"

#include "emlaw/error.hpp"
#include "emlaw/tokenize.hpp"

namespace emlaw {

std::string_view to_string(Statistic s) noexcept {
    return s == Statistic::Intercept ? "intercept" : "slope";
}

Statistic parse_statistic(std::string_view name) {
    if (name == "intercept") return Statistic::Intercept;
    if (name == "slope") return Statistic::Slope;
    throw Error(ErrorCode::InvalidArgument, "statistic must be 'intercept' or 'slope', got '" +
                                                std::string(name) + "'");
}

void EmbediConfig::validate() const {
    if (min_samples < 2) {
        throw Error(ErrorCode::InvalidArgument, "min_samples must be >= 2");
    }
    if (prompt_len < 1 || answer_len < 1) {
        throw Error(ErrorCode::InvalidArgument, "prompt_len and answer_len must be >= 1");
    }
}

std::optional<double> preset_tau_k(std::string_view family) {
    if (family == "pythia") return 0.0;
    if (family == "olmo2") return 3.0;
    return std::nullopt;
}

int decide(const RegressionReport& report, const EmbediConfig& cfg) {
    const double value = cfg.statistic == Statistic::Intercept ? report.intercept : report.slope;
    return value > cfg.threshold() ? 1 : 0;
}

EmbediVerdict infer_membership(std::span<const Document> suspect, const Backend& backend,
                               Tokenizer& tokenizer, const EmbediConfig& cfg,
                               const GenerationConfig& generation, std::int64_t seed,
                               const AnalysisOptions& analysis, std::size_t concurrency) {
    cfg.validate();
    std::size_t eligible = 0;
    for (const auto& doc : suspect) {
        eligible += doc.tokens.size() > cfg.sequence_len() ? 1 : 0;
    }
    if (eligible < cfg.min_samples) {
        throw Error(ErrorCode::InsufficientSuspectData,
                    "need " + std::to_string(cfg.min_samples) + " sequences of at least " +
                        std::to_string(cfg.sequence_len() + 1) + " tokens, found " +
                        std::to_string(eligible) + " (short by " +
                        std::to_string(cfg.min_samples - eligible) + ")");
    }

    RunConfig run;
    run.prompt_len = cfg.prompt_len;
    run.answer_len = cfg.answer_len;
    run.n_samples = cfg.min_samples;
    run.rng_seed = seed;
    auto records = sample_pairs(suspect, run);
    auto parts = apply_filter(std::move(records), analysis.filter_mode);
    auto all = std::move(parts.retained);
    all.insert(all.end(), std::make_move_iterator(parts.excluded.begin()),
               std::make_move_iterator(parts.excluded.end()));

    EmbediVerdict verdict;
    verdict.evidence = run_emlaw(all, backend, tokenizer, generation, analysis, concurrency);
    verdict.statistic = cfg.statistic;
    verdict.threshold = cfg.threshold();
    verdict.value = cfg.statistic == Statistic::Intercept ? verdict.evidence.regression.intercept
                                                          : verdict.evidence.regression.slope;
    verdict.label = decide(verdict.evidence.regression, cfg);
    verdict.eligible_documents = eligible;
    return verdict;
}

}  // namespace emlaw
