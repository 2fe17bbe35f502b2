#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emlaw/seqmetrics.hpp"
#include "emlaw/types.hpp"

namespace emlaw {

class Tokenizer;

struct Document {
    std::string id;
    TokenSequence tokens;
};

// DocumentUniform picks each document with equal probability;
// TokenUniform weights documents by their token count.
enum class SamplingMode { DocumentUniform, TokenUniform };

std::string_view to_string(SamplingMode mode) noexcept;
SamplingMode parse_sampling_mode(std::string_view name);

struct RunConfig {
    std::uint32_t prompt_len = 100;
    std::uint32_t answer_len = 50;
    std::uint64_t n_samples = 1000;
    std::int64_t rng_seed = 0;
    SamplingMode sampling = SamplingMode::DocumentUniform;
    FilterMode filter_mode = FilterMode::Subsequence;

    void validate() const;
    std::uint32_t window() const noexcept { return prompt_len + answer_len; }
};

// JSONL, optionally gzip-compressed. Each line carries "tokens" (array of
// non-negative integers) or "text" (encoded with `tokenizer`); "id" is used
// as the document name when present.
std::vector<Document> read_corpus(const std::filesystem::path& path, Tokenizer& tokenizer);
std::vector<Document> parse_corpus(std::string_view jsonl, Tokenizer& tokenizer,
                                   std::string_view origin = "<memory>");

// Draws exactly n_samples windows with replacement. Documents need strictly
// more than |p| + |s| tokens. Deterministic in (documents, cfg).
std::vector<SampleRecord> sample_pairs(std::span<const Document> documents, const RunConfig& cfg);

std::string window_hash(std::span<const TokenId> window);

struct FilterPartition {
    std::vector<SampleRecord> retained;
    std::vector<SampleRecord> excluded;
};

// Sets lcs and filtered on every record, then partitions preserving order.
FilterPartition apply_filter(std::vector<SampleRecord> records,
                             FilterMode mode = FilterMode::Subsequence);

// Records JSONL: one record per line with fields id, prompt, answer,
// response, lcs, distance, filtered, source_doc, window_hash.
std::string record_to_json(const SampleRecord& record);
SampleRecord record_from_json(std::string_view line);
std::string write_records(std::span<const SampleRecord> records);
std::vector<SampleRecord> parse_records(std::string_view jsonl, std::string_view origin = "<memory>");
std::vector<SampleRecord> read_records(const std::filesystem::path& path);

}  // namespace emlaw
