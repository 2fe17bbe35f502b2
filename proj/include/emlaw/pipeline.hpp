#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emlaw/backend.hpp"
#include "emlaw/entropy.hpp"
#include "emlaw/regression.hpp"
#include "emlaw/seqmetrics.hpp"
#include "emlaw/types.hpp"

namespace emlaw {

class Tokenizer;

struct AnalysisOptions {
    // Level sets with fewer instances stay out of the fit and the report.
    std::uint64_t min_level_count = 1;
    // Also fit without the e = 0 point.
    bool exclude_zero = false;
    FilterMode filter_mode = FilterMode::Subsequence;
};

struct GenerationStats {
    std::size_t requested = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t already_present = 0;
    std::size_t skipped_filtered = 0;
    std::vector<std::string> failure_samples;  // first few messages
};

// Fills `response` for every retained record that lacks one. Records that
// already carry a response are left untouched, so an interrupted run can be
// resumed. Text responses are re-tokenized in record order after all
// requests finish. `on_record` fires (serialised) as each record completes.
GenerationStats generate_responses(std::vector<SampleRecord>& records, const Backend& backend,
                                   Tokenizer& tokenizer, const GenerationConfig& cfg,
                                   std::size_t concurrency,
                                   const std::function<void(const SampleRecord&)>& on_record = {},
                                   const std::atomic<bool>* cancel = nullptr);

// Sets `distance` on every record with a response. Returns how many were scored.
std::size_t score_records(std::vector<SampleRecord>& records);

struct LevelSetReport {
    std::uint32_t e = 0;
    std::uint64_t count = 0;
    std::size_t unique_tokens = 0;
    double entropy_bits = 0.0;
    double normalized = 1.0;
};

struct RecordCounts {
    std::size_t total = 0;
    std::size_t filtered = 0;
    std::size_t scored = 0;
    std::size_t unscored = 0;  // retained but no response (failed or pending)
};

struct EmLawReport {
    std::vector<LevelSetReport> levels;  // ascending e, count >= min_level_count
    RegressionReport regression;
    std::optional<RegressionReport> regression_excluding_zero;
    std::string normalization_note;
    RecordCounts counts;
    std::size_t generation_failures = 0;
    AnalysisOptions options;
    std::vector<std::string> warnings;
};

extern const char* const kNormalizationNote;

// Level-set analysis over already scored records: pools answers by edit
// distance, estimates entropy per level set, fits entropy against e.
// Throws InsufficientLevelSets when fewer than two level sets survive.
EmLawReport analyze_emlaw(std::span<const SampleRecord> records, const AnalysisOptions& opts = {});

// generate -> score -> analyze_emlaw.
EmLawReport run_emlaw(std::vector<SampleRecord>& records, const Backend& backend, Tokenizer& tokenizer,
                      const GenerationConfig& cfg, const AnalysisOptions& opts = {},
                      std::size_t concurrency = 8);

struct InstancePoint {
    std::uint64_t id = 0;
    std::uint32_t distance = 0;
    double entropy_bits = 0.0;
    std::size_t support = 0;
};

struct InstancewiseResult {
    std::vector<InstancePoint> points;
    std::optional<RegressionReport> regression;
    std::string regression_error;  // set when the fit is degenerate
    RecordCounts counts;
    std::size_t generation_failures = 0;
};

// One (d(r_i, s_i), M(s_i)) point per scored, retained record.
InstancewiseResult analyze_instancewise(std::span<const SampleRecord> records,
                                        const AnalysisOptions& opts = {});
InstancewiseResult run_instancewise(std::vector<SampleRecord>& records, const Backend& backend,
                                    Tokenizer& tokenizer, const GenerationConfig& cfg,
                                    const AnalysisOptions& opts = {}, std::size_t concurrency = 8);

enum class GibberishLabel { Gibberish, NonGibberish };

// JSONL: {"id": <record id>, "label": "gibberish" | "non_gibberish"} per line.
std::map<std::uint64_t, GibberishLabel> parse_labels(std::string_view jsonl);

struct GibberishRow {
    std::string set_name;
    std::size_t instances = 0;
    std::size_t unique_tokens = 0;
    std::size_t unique_chars = 0;
    std::size_t total_chars = 0;
    double entropy_tokens = 0.0;
    double entropy_chars = 0.0;
    double normalized_tokens = 1.0;
    double normalized_chars = 1.0;
};

struct GibberishReport {
    std::vector<GibberishRow> rows;
    std::vector<std::string> warnings;
};

// Token- vs char-level statistics for the zero-distance set, the labelled
// gibberish and non-gibberish sets, and non-gibberish within zero distance.
// Char-level text is the decoded answer. Empty sets are omitted with a
// warning; labels naming unknown records throw UnknownLabel.
GibberishReport run_gibberish(std::span<const SampleRecord> records,
                              const std::map<std::uint64_t, GibberishLabel>& labels,
                              const Tokenizer& tokenizer);

// Triage heuristic in [0, 1]; each satisfied feature adds 0.25:
//   upper, lower and digit each make up >= 10% of chars,
//   no whitespace-separated word structure (fewer than two runs),
//   no character 4-gram occurs twice,
//   at least 32 chars.
double gibberish_score(std::string_view text);

struct GibberishCandidate {
    std::uint64_t id = 0;
    double score = 0.0;
};

// Scores the decoded answer of every record, highest first.
std::vector<GibberishCandidate> flag_gibberish_candidates(std::span<const SampleRecord> records,
                                                          const Tokenizer& tokenizer);

}  // namespace emlaw
