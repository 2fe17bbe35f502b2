#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emlaw/backend.hpp"
#include "emlaw/embedi.hpp"
#include "emlaw/pipeline.hpp"
#include "emlaw/sampler.hpp"
#include "emlaw/tokenize.hpp"

namespace emlaw {

inline constexpr const char* kToolVersion = "0.3.0";

struct TokenizerOptions {
    TokenizerKind kind = TokenizerKind::Byte;
    std::string vocab_path;   // bpe vocab, or whitespace session vocabulary
    std::string merges_path;  // bpe only
    UnknownPolicy unknown_policy = UnknownPolicy::Error;
    PreTokenize pretokenize = PreTokenize::Whitespace;
    bool byte_level = false;
};

// A whitespace tokenizer with a vocab path that does not exist yet starts
// an empty session.
Tokenizer make_tokenizer(const TokenizerOptions& opts);

struct EffectiveConfig {
    RunConfig run;
    GenerationConfig generation;
    bool max_tokens_explicit = false;
    BackendSpec backend;
    std::size_t concurrency = 8;
    std::string kgram_corpus;
    TokenizerOptions tokenizer;
    AnalysisOptions analysis;
    EmbediConfig embedi;

    // max_tokens follows answer_len (|r| = |s|) unless set explicitly.
    GenerationConfig effective_generation() const;
    EmbediConfig effective_embedi() const;
};

struct ConfigIssue {
    std::string path;
    std::string message;
};

struct ConfigResult {
    EffectiveConfig config;
    std::vector<ConfigIssue> errors;
    std::vector<ConfigIssue> warnings;  // unknown fields

    bool ok() const noexcept { return errors.empty(); }
};

// Applies defaults to a JSON config document and reports every violation by
// field path. Unknown fields are warnings.
ConfigResult validate_config(const nlohmann::json& doc);
ConfigResult validate_config_file(const std::filesystem::path& path);

// Re-checks cross-field invariants after flag overrides.
std::vector<ConfigIssue> check_config(const EffectiveConfig& cfg);

// Effective config echo; the API key is never written out.
nlohmann::ordered_json config_to_json(const EffectiveConfig& cfg);
std::string config_digest(const EffectiveConfig& cfg);

}  // namespace emlaw
