#include "emlaw/backend.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "emlaw/entropy.hpp"
#include "emlaw/error.hpp"
#include "emlaw/tokenize.hpp"
#include "emlaw/util.hpp"

namespace emlaw {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ms(Clock::time_point start) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count());
}

TokenSequence truncated(std::span<const TokenId> tokens, std::uint32_t max_tokens) {
    auto n = std::min<std::size_t>(tokens.size(), max_tokens);
    return TokenSequence(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n));
}

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status <= 599);
}

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

void GenerationConfig::validate() const {
    if (max_tokens < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
    }
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "top_p must lie in (0, 1]");
    }
    if (top_k && *top_k < 1) {
        throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
    }
}

std::string_view to_string(BackendKind kind) noexcept {
    switch (kind) {
        case BackendKind::Http: return "http";
        case BackendKind::MockPerfect: return "mock_perfect";
        case BackendKind::MockUniform: return "mock_uniform";
        case BackendKind::MockEntropyNoise: return "mock_entropy_noise";
        case BackendKind::MockKgram: return "mock_kgram";
    }
    return "http";
}

BackendKind parse_backend_kind(std::string_view name) {
    for (auto k : {BackendKind::Http, BackendKind::MockPerfect, BackendKind::MockUniform,
                   BackendKind::MockEntropyNoise, BackendKind::MockKgram}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown backend kind '" + std::string(name) + "'");
}

void BackendSpec::validate() const {
    if (kind == BackendKind::Http && (endpoint_url.empty() || model_name.empty())) {
        throw Error(ErrorCode::InvalidArgument, "http backend requires an endpoint and a model name");
    }
    if (retry.attempts < 1) {
        throw Error(ErrorCode::InvalidArgument, "retry attempts must be >= 1");
    }
    for (const char* key : {"vocab_size", "k"}) {
        if (auto it = mock_params.find(key); it != mock_params.end() && !(it->second >= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, std::string("mock parameter ") + key + " must be >= 1");
        }
    }
}

double BackendSpec::param(const std::string& key, double fallback) const {
    auto it = mock_params.find(key);
    return it == mock_params.end() ? fallback : it->second;
}

std::uint64_t derive_seed(std::optional<std::int64_t> seed, std::span<const TokenId> prompt,
                          std::span<const TokenId> answer) {
    Fnv1a h;
    const auto s = static_cast<std::uint64_t>(seed.value_or(0));
    const std::uint32_t words[2] = {static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    h.update(std::span<const std::uint32_t>(words));
    const std::uint32_t sizes[2] = {static_cast<std::uint32_t>(prompt.size()),
                                    static_cast<std::uint32_t>(answer.size())};
    h.update(std::span<const std::uint32_t>(sizes));
    h.update(prompt);
    h.update(answer);
    return h.value();
}

// --- mocks ---------------------------------------------------------------

GenerationResult MockPerfect::generate(std::span<const TokenId>, std::span<const TokenId> answer,
                                       const GenerationConfig& cfg) const {
    return {truncated(answer, cfg.max_tokens), std::nullopt, 0};
}

MockUniform::MockUniform(std::uint32_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size_ < 1) {
        throw Error(ErrorCode::InvalidArgument, "mock_uniform needs vocab_size >= 1");
    }
}

GenerationResult MockUniform::generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                                       const GenerationConfig& cfg) const {
    std::mt19937_64 rng(derive_seed(cfg.seed, prompt, answer));
    std::uniform_int_distribution<TokenId> draw(0, vocab_size_ - 1);
    GenerationResult r;
    r.response_tokens.reserve(cfg.max_tokens);
    for (std::uint32_t i = 0; i < cfg.max_tokens; ++i) {
        r.response_tokens.push_back(draw(rng));
    }
    return r;
}

TokenSequence mock_entropy_noise_corrupt(std::span<const TokenId> answer, std::uint32_t vocab_size,
                                         std::uint64_t seed) {
    if (vocab_size < 2) {
        throw Error(ErrorCode::InvalidArgument, "entropy-noise corruption needs vocab_size >= 2");
    }
    TokenSequence out(answer.begin(), answer.end());
    if (answer.empty()) {
        return out;
    }
    const double rate = std::min(
        1.0, instance_entropy(answer).bits / std::log2(static_cast<double>(vocab_size)));
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution hit(rate);
    for (auto& tok : out) {
        if (!hit(rng)) {
            continue;
        }
        if (tok >= vocab_size) {
            tok = std::uniform_int_distribution<TokenId>(0, vocab_size - 1)(rng);
        } else {
            // Uniform over the vocab_size - 1 other ids.
            TokenId v = std::uniform_int_distribution<TokenId>(0, vocab_size - 2)(rng);
            tok = v >= tok ? v + 1 : v;
        }
    }
    return out;
}

MockEntropyNoise::MockEntropyNoise(std::uint32_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size_ < 2) {
        throw Error(ErrorCode::InvalidArgument, "mock_entropy_noise needs vocab_size >= 2");
    }
}

GenerationResult MockEntropyNoise::generate(std::span<const TokenId> prompt,
                                            std::span<const TokenId> answer,
                                            const GenerationConfig& cfg) const {
    auto corrupted = mock_entropy_noise_corrupt(answer, vocab_size_, derive_seed(cfg.seed, prompt, answer));
    return {truncated(corrupted, cfg.max_tokens), std::nullopt, 0};
}

std::size_t MockKgram::ContextHash::operator()(const TokenSequence& ctx) const noexcept {
    Fnv1a h;
    h.update(ctx);
    return static_cast<std::size_t>(h.value());
}

MockKgram::MockKgram(std::span<const TokenSequence> training, std::uint32_t k, std::uint32_t vocab_size)
    : tables_(std::max<std::uint32_t>(k, 1)), vocab_size_(vocab_size) {
    if (vocab_size_ < 1) {
        throw Error(ErrorCode::InvalidArgument, "mock_kgram needs vocab_size >= 1");
    }
    for (const auto& seq : training) {
        for (std::size_t pos = 0; pos < seq.size(); ++pos) {
            for (std::size_t n = 1; n <= tables_.size() && n <= pos; ++n) {
                TokenSequence ctx(seq.begin() + static_cast<std::ptrdiff_t>(pos - n),
                                  seq.begin() + static_cast<std::ptrdiff_t>(pos));
                ++tables_[n - 1][std::move(ctx)][seq[pos]];
            }
        }
    }
}

GenerationResult MockKgram::generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                                     const GenerationConfig& cfg) const {
    std::mt19937_64 rng(derive_seed(cfg.seed, prompt, answer));
    TokenSequence context(prompt.begin(), prompt.end());
    GenerationResult r;
    for (std::uint32_t step = 0; step < cfg.max_tokens; ++step) {
        const Successors* next = nullptr;
        for (std::size_t n = std::min(tables_.size(), context.size()); n >= 1 && !next; --n) {
            TokenSequence key(context.end() - static_cast<std::ptrdiff_t>(n), context.end());
            if (auto it = tables_[n - 1].find(key); it != tables_[n - 1].end()) {
                next = &it->second;
            }
        }
        TokenId tok = 0;
        if (!next) {
            tok = std::uniform_int_distribution<TokenId>(0, vocab_size_ - 1)(rng);
        } else {
            std::vector<std::pair<TokenId, std::uint32_t>> cands(next->begin(), next->end());
            std::stable_sort(cands.begin(), cands.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            if (cfg.greedy()) {
                tok = cands.front().first;
            } else {
                if (cfg.top_k && cands.size() > *cfg.top_k) {
                    cands.resize(*cfg.top_k);
                }
                std::vector<double> weights;
                double total = 0.0;
                for (const auto& [id, count] : cands) {
                    weights.push_back(std::pow(static_cast<double>(count), 1.0 / cfg.temperature));
                    total += weights.back();
                }
                double cumulative = 0.0;
                std::size_t keep = 0;
                while (keep < weights.size()) {
                    cumulative += weights[keep++] / total;
                    if (cumulative >= cfg.top_p) {
                        break;
                    }
                }
                weights.resize(keep);
                std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
                tok = cands[pick(rng)].first;
            }
        }
        r.response_tokens.push_back(tok);
        context.push_back(tok);
    }
    return r;
}

// --- http ----------------------------------------------------------------

std::string completion_request_body(std::string_view model, std::string_view prompt,
                                    const GenerationConfig& cfg) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["prompt"] = prompt;
    body["max_tokens"] = cfg.max_tokens;
    body["temperature"] = cfg.temperature;
    body["top_p"] = cfg.top_p;
    if (cfg.seed) {
        body["seed"] = *cfg.seed;
    }
    if (cfg.top_k) {
        body["top_k"] = *cfg.top_k;
    }
    return body.dump();
}

std::string parse_completion_response(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].is_object() ||
        !doc["choices"][0].contains("text") || !doc["choices"][0]["text"].is_string()) {
        throw Error(ErrorCode::ProtocolError, "response lacks choices[0].text");
    }
    return doc["choices"][0]["text"].get<std::string>();
}

HttpBackend::HttpBackend(BackendSpec spec, const Tokenizer& tokenizer)
    : spec_(std::move(spec)), tokenizer_(tokenizer) {
    spec_.validate();
    std::string url = spec_.endpoint_url;
    while (!url.empty() && url.back() == '/') {
        url.pop_back();
    }
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        url = "http://" + url;
        scheme_end = 4;
    }
    if (url.compare(0, scheme_end, "http") != 0) {
        throw Error(ErrorCode::InvalidArgument, "only http:// endpoints are supported: " + spec_.endpoint_url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = (path_start == std::string::npos ? std::string{} : url.substr(path_start)) + "/v1/completions";
}

std::string HttpBackend::complete(const std::string& prompt_text, const GenerationConfig& cfg) const {
    const std::string body = completion_request_body(spec_.model_name, prompt_text, cfg);
    httplib::Headers headers;
    if (!spec_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + spec_.api_key);
    }
    auto backoff = spec_.retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(spec_.timeout);
        client.set_read_timeout(spec_.timeout);
        client.set_write_timeout(spec_.timeout);
        auto res = client.Post(path_, headers, body, "application/json");
        const bool last = attempt >= spec_.retry.attempts;
        if (!res) {
            if (last) {
                throw Error(ErrorCode::BackendUnavailable,
                            scheme_host_port_ + path_ + ": " + httplib::to_string(res.error()) +
                                " after " + std::to_string(attempt) + " attempt(s)");
            }
        } else if (res->status >= 200 && res->status < 300) {
            return parse_completion_response(res->body);
        } else if (last || !retryable_status(res->status)) {
            throw BackendRejected(res->status, excerpt(res->body));
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, spec_.retry.max_backoff);
    }
}

GenerationResult HttpBackend::generate(std::span<const TokenId> prompt, std::span<const TokenId>,
                                       const GenerationConfig& cfg) const {
    const auto start = Clock::now();
    GenerationResult r;
    r.response_text = complete(tokenizer_.decode(prompt), cfg);
    r.latency_ms = elapsed_ms(start);
    return r;
}

// --- construction and batching -------------------------------------------

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, const Tokenizer& tokenizer,
                                      const MockContext& context) {
    spec.validate();
    const auto vocab = static_cast<std::uint32_t>(spec.param("vocab_size", 1000));
    switch (spec.kind) {
        case BackendKind::Http: return std::make_unique<HttpBackend>(spec, tokenizer);
        case BackendKind::MockPerfect: return std::make_unique<MockPerfect>();
        case BackendKind::MockUniform: return std::make_unique<MockUniform>(vocab);
        case BackendKind::MockEntropyNoise: return std::make_unique<MockEntropyNoise>(vocab);
        case BackendKind::MockKgram:
            return std::make_unique<MockKgram>(context.kgram_training,
                                               static_cast<std::uint32_t>(spec.param("k", 4)), vocab);
    }
    throw Error(ErrorCode::InvalidArgument, "unsupported backend");
}

GenerationResult generate(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                          const GenerationConfig& cfg, const Backend& backend, Tokenizer& tokenizer) {
    if (prompt.empty()) {
        throw Error(ErrorCode::InvalidArgument, "prompt must be non-empty");
    }
    auto r = backend.generate(prompt, answer, cfg);
    if (!backend.token_native() && r.response_text) {
        r.response_tokens = tokenizer.encode(*r.response_text);
    }
    if (r.response_tokens.size() > cfg.max_tokens) {
        r.response_tokens.resize(cfg.max_tokens);
    }
    return r;
}

std::vector<GenerationOutcome> generate_batch(
    const Backend& backend, std::span<const GenerationJob> jobs, const GenerationConfig& cfg,
    std::size_t concurrency, const std::function<void(std::size_t, const GenerationOutcome&)>& on_complete,
    const std::atomic<bool>* cancel) {
    std::vector<GenerationOutcome> outcomes(jobs.size(), GenerationFailure{"cancelled"});
    std::atomic<std::size_t> next{0};
    std::mutex done_mutex;

    auto worker = [&] {
        for (;;) {
            if (cancel && cancel->load()) {
                return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) {
                return;
            }
            GenerationOutcome outcome;
            try {
                if (jobs[i].prompt.empty()) {
                    throw Error(ErrorCode::InvalidArgument, "prompt must be non-empty");
                }
                outcome = backend.generate(jobs[i].prompt, jobs[i].answer, cfg);
            } catch (const std::exception& e) {
                outcome = GenerationFailure{e.what()};
            }
            std::lock_guard lock(done_mutex);
            outcomes[i] = std::move(outcome);
            if (on_complete) {
                on_complete(i, outcomes[i]);
            }
        }
    };

    const std::size_t n = std::max<std::size_t>(1, std::min(concurrency, jobs.size()));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t t = 0; t < n; ++t) {
            pool.emplace_back(worker);
        }
    }
    return outcomes;
}

}  // namespace emlaw
