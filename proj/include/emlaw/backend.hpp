#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "emlaw/types.hpp"

namespace emlaw {

class Tokenizer;

struct GenerationConfig {
    std::uint32_t max_tokens = 50;
    double temperature = 0.8;
    double top_p = 1.0;
    std::optional<std::uint32_t> top_k;  // nullopt = unlimited
    std::optional<std::int64_t> seed;

    void validate() const;
    bool greedy() const noexcept { return temperature == 0.0; }
};

enum class BackendKind { Http, MockPerfect, MockUniform, MockEntropyNoise, MockKgram };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view name);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{8000};
};

struct BackendSpec {
    BackendKind kind = BackendKind::MockPerfect;
    std::string endpoint_url;
    std::string model_name;
    std::string api_key;
    // Mock knobs: "vocab_size" (uniform, entropy_noise, kgram), "k" (kgram).
    std::map<std::string, double> mock_params;
    RetryPolicy retry;
    std::chrono::milliseconds timeout{60000};

    void validate() const;
    double param(const std::string& key, double fallback) const;
};

struct GenerationResult {
    TokenSequence response_tokens;
    std::optional<std::string> response_text;
    std::uint64_t latency_ms = 0;
};

class Backend {
public:
    virtual ~Backend() = default;

    // The answer is only visible to mocks that need an oracle; real models
    // see the prompt alone. Must be safe to call concurrently.
    virtual GenerationResult generate(std::span<const TokenId> prompt,
                                      std::span<const TokenId> answer,
                                      const GenerationConfig& cfg) const = 0;

    // False when the backend returns text that must be re-tokenized locally.
    virtual bool token_native() const noexcept { return true; }
    virtual BackendKind kind() const noexcept = 0;
};

// Returns the answer verbatim.
class MockPerfect final : public Backend {
public:
    GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              const GenerationConfig& cfg) const override;
    BackendKind kind() const noexcept override { return BackendKind::MockPerfect; }
};

// max_tokens ids drawn uniformly from [0, vocab_size).
class MockUniform final : public Backend {
public:
    explicit MockUniform(std::uint32_t vocab_size);
    GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              const GenerationConfig& cfg) const override;
    BackendKind kind() const noexcept override { return BackendKind::MockUniform; }

private:
    std::uint32_t vocab_size_;
};

// Substitutes answer tokens at a rate proportional to the answer's entropy.
class MockEntropyNoise final : public Backend {
public:
    explicit MockEntropyNoise(std::uint32_t vocab_size);
    GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              const GenerationConfig& cfg) const override;
    BackendKind kind() const noexcept override { return BackendKind::MockEntropyNoise; }

private:
    std::uint32_t vocab_size_;
};

// Order-k Markov model over token ids trained on a fixed set of sequences;
// backs off to shorter contexts and finally to uniform draws.
class MockKgram final : public Backend {
public:
    MockKgram(std::span<const TokenSequence> training, std::uint32_t k, std::uint32_t vocab_size);
    GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              const GenerationConfig& cfg) const override;
    BackendKind kind() const noexcept override { return BackendKind::MockKgram; }

private:
    struct ContextHash {
        std::size_t operator()(const TokenSequence& ctx) const noexcept;
    };
    using Successors = std::map<TokenId, std::uint32_t>;
    using Table = std::unordered_map<TokenSequence, Successors, ContextHash>;

    std::vector<Table> tables_;  // tables_[n - 1] holds order-n contexts
    std::uint32_t vocab_size_;
};

// OpenAI-compatible completions client (POST {endpoint}/v1/completions).
// Prompts are decoded to text with the pipeline tokenizer; responses come
// back as text only.
class HttpBackend final : public Backend {
public:
    HttpBackend(BackendSpec spec, const Tokenizer& tokenizer);
    GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              const GenerationConfig& cfg) const override;
    bool token_native() const noexcept override { return false; }
    BackendKind kind() const noexcept override { return BackendKind::Http; }

    std::string complete(const std::string& prompt_text, const GenerationConfig& cfg) const;

private:
    BackendSpec spec_;
    const Tokenizer& tokenizer_;
    std::string scheme_host_port_;
    std::string path_;
};

// Request body with fields in the documented order.
std::string completion_request_body(std::string_view model, std::string_view prompt,
                                    const GenerationConfig& cfg);
// choices[0].text, or ProtocolError.
std::string parse_completion_response(std::string_view body);

// Entropy-driven corruption: each position is replaced, with probability
// H(answer) / log2(vocab_size), by a uniformly drawn different token.
TokenSequence mock_entropy_noise_corrupt(std::span<const TokenId> answer, std::uint32_t vocab_size,
                                         std::uint64_t seed);

// Seed mixed from the run seed and the request contents so mocks are pure
// functions of (prompt, answer, seed).
std::uint64_t derive_seed(std::optional<std::int64_t> seed, std::span<const TokenId> prompt,
                          std::span<const TokenId> answer);

struct MockContext {
    std::vector<TokenSequence> kgram_training;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const Tokenizer& tokenizer,
                                      const MockContext& context = {});

// Single-prompt generation, re-encoding text responses with `tokenizer` and
// truncating to max_tokens.
GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                          const GenerationConfig& cfg, const Backend& backend, Tokenizer& tokenizer);

struct GenerationJob {
    std::uint64_t id = 0;
    std::span<const TokenId> prompt;
    std::span<const TokenId> answer;
};

struct GenerationFailure {
    std::string message;
};

using GenerationOutcome = std::variant<GenerationResult, GenerationFailure>;

// Runs jobs over `concurrency` workers. Outcomes are indexed like `jobs`;
// `on_complete` is serialised. Jobs not started when `cancel` is raised are
// left as GenerationFailure{"cancelled"}.
std::vector<GenerationOutcome> generate_batch(
    const Backend& backend, std::span<const GenerationJob> jobs, const GenerationConfig& cfg,
    std::size_t concurrency,
    const std::function<void(std::size_t, const GenerationOutcome&)>& on_complete = {},
    const std::atomic<bool>* cancel = nullptr);

}  // namespace emlaw
