#include "emlaw/config.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "emlaw/error.hpp"
#include "emlaw/util.hpp"

namespace emlaw {

using json = nlohmann::json;

Tokenizer make_tokenizer(const TokenizerOptions& opts) {
    switch (opts.kind) {
        case TokenizerKind::Byte:
            return Tokenizer::byte();
        case TokenizerKind::Whitespace:
            if (!opts.vocab_path.empty() && std::filesystem::exists(opts.vocab_path)) {
                return Tokenizer::load_whitespace(opts.vocab_path);
            }
            return Tokenizer::whitespace();
        case TokenizerKind::Bpe: {
            if (opts.vocab_path.empty() || opts.merges_path.empty()) {
                throw Error(ErrorCode::InvalidArgument, "bpe tokenizer needs --vocab and --merges");
            }
            auto base = Tokenizer::load_bpe(opts.vocab_path, opts.merges_path, opts.unknown_policy);
            auto spec = base.spec();
            spec.pretokenize = opts.pretokenize;
            spec.byte_level = opts.byte_level;
            return Tokenizer(std::move(spec));
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unsupported tokenizer");
}

GenerationConfig EffectiveConfig::effective_generation() const {
    auto g = generation;
    if (!max_tokens_explicit) {
        g.max_tokens = run.answer_len;
    }
    return g;
}

EmbediConfig EffectiveConfig::effective_embedi() const {
    auto e = embedi;
    e.prompt_len = run.prompt_len;
    e.answer_len = run.answer_len;
    return e;
}

namespace {

// Walks one JSON object, collecting typed fields and issues.
class Section {
public:
    Section(const json& obj, std::string prefix, ConfigResult& result)
        : obj_(obj), prefix_(std::move(prefix)), result_(result) {}

    template <typename Fn>
    void field(const char* key, Fn&& apply) {
        known_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return;
        }
        try {
            if (auto msg = apply(*it); !msg.empty()) {
                error(key, msg);
            }
        } catch (const std::exception& e) {
            error(key, e.what());
        }
    }

    void positive(const char* key, std::uint64_t& out, std::uint64_t max = std::numeric_limits<std::uint32_t>::max()) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
                (v.is_number_unsigned() && v.get<std::uint64_t>() > max)) {
                return "must be a positive integer";
            }
            out = v.get<std::uint64_t>();
            return {};
        });
    }

    void integer(const char* key, std::int64_t& out) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_number_integer()) {
                return "must be an integer";
            }
            out = v.get<std::int64_t>();
            return {};
        });
    }

    void number(const char* key, double& out) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                return "must be a finite number";
            }
            out = v.get<double>();
            return {};
        });
    }

    void boolean(const char* key, bool& out) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_boolean()) {
                return "must be true or false";
            }
            out = v.get<bool>();
            return {};
        });
    }

    void string(const char* key, std::string& out) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_string()) {
                return "must be a string";
            }
            out = v.get<std::string>();
            return {};
        });
    }

    template <typename Parse>
    void choice(const char* key, Parse&& parse) {
        field(key, [&](const json& v) -> std::string {
            if (!v.is_string()) {
                return "must be a string";
            }
            parse(v.get<std::string>());
            return {};
        });
    }

    void error(const std::string& key, const std::string& msg) {
        result_.errors.push_back({path(key), msg});
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void warn_unknown(const std::set<std::string>& subsections = {}) {
        for (const auto& [key, value] : obj_.items()) {
            if (!known_.contains(key) && !subsections.contains(key)) {
                result_.warnings.push_back({path(key), "unknown field ignored"});
            }
        }
    }

private:
    const json& obj_;
    std::string prefix_;
    ConfigResult& result_;
    std::set<std::string> known_;
};

const json& subsection(const json& doc, const char* key, ConfigResult& result) {
    static const json empty = json::object();
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) {
        return empty;
    }
    if (!it->is_object()) {
        result.errors.push_back({key, "must be an object"});
        return empty;
    }
    return *it;
}

std::string message_of(const Error& e) {
    std::string what = e.what();
    auto colon = what.find(": ");
    return colon == std::string::npos ? what : what.substr(colon + 2);
}

}  // namespace

ConfigResult validate_config(const json& doc) {
    ConfigResult result;
    auto& cfg = result.config;
    if (!doc.is_object()) {
        result.errors.push_back({"", "config must be a JSON object"});
        return result;
    }

    Section top(doc, "", result);
    std::uint64_t u = 0;
    u = cfg.run.prompt_len;
    top.positive("prompt_len", u);
    cfg.run.prompt_len = static_cast<std::uint32_t>(u);
    u = cfg.run.answer_len;
    top.positive("answer_len", u);
    cfg.run.answer_len = static_cast<std::uint32_t>(u);
    top.positive("n_samples", cfg.run.n_samples, std::numeric_limits<std::uint64_t>::max());
    top.integer("seed", cfg.run.rng_seed);
    top.choice("sampling", [&](const std::string& s) { cfg.run.sampling = parse_sampling_mode(s); });
    top.choice("filter_mode", [&](const std::string& s) {
        if (s == "subsequence") {
            cfg.analysis.filter_mode = FilterMode::Subsequence;
        } else if (s == "substring") {
            cfg.analysis.filter_mode = FilterMode::Substring;
        } else {
            throw std::invalid_argument("must be 'subsequence' or 'substring'");
        }
    });
    cfg.run.filter_mode = cfg.analysis.filter_mode;
    top.warn_unknown({"tokenizer", "generation", "backend", "analysis", "embedi"});

    Section tok(subsection(doc, "tokenizer", result), "tokenizer", result);
    tok.choice("kind", [&](const std::string& s) { cfg.tokenizer.kind = parse_tokenizer_kind(s); });
    tok.string("vocab", cfg.tokenizer.vocab_path);
    tok.string("merges", cfg.tokenizer.merges_path);
    tok.choice("unknown_policy", [&](const std::string& s) {
        if (s == "error") {
            cfg.tokenizer.unknown_policy = UnknownPolicy::Error;
        } else if (s == "byte_fallback") {
            cfg.tokenizer.unknown_policy = UnknownPolicy::ByteFallback;
        } else {
            throw std::invalid_argument("must be 'error' or 'byte_fallback'");
        }
    });
    tok.choice("pretokenize", [&](const std::string& s) {
        if (s == "whitespace") {
            cfg.tokenizer.pretokenize = PreTokenize::Whitespace;
        } else if (s == "space_prefix") {
            cfg.tokenizer.pretokenize = PreTokenize::SpacePrefix;
        } else if (s == "none") {
            cfg.tokenizer.pretokenize = PreTokenize::None;
        } else {
            throw std::invalid_argument("must be 'whitespace', 'space_prefix' or 'none'");
        }
    });
    tok.boolean("byte_level", cfg.tokenizer.byte_level);
    tok.warn_unknown();

    Section gen(subsection(doc, "generation", result), "generation", result);
    gen.field("max_tokens", [&](const json& v) -> std::string {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
            return "must be a positive integer";
        }
        cfg.generation.max_tokens = v.get<std::uint32_t>();
        cfg.max_tokens_explicit = true;
        return {};
    });
    gen.number("temperature", cfg.generation.temperature);
    gen.number("top_p", cfg.generation.top_p);
    gen.field("top_k", [&](const json& v) -> std::string {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
            return "must be a positive integer or null";
        }
        cfg.generation.top_k = v.get<std::uint32_t>();
        return {};
    });
    gen.field("seed", [&](const json& v) -> std::string {
        if (!v.is_number_integer()) {
            return "must be an integer or null";
        }
        cfg.generation.seed = v.get<std::int64_t>();
        return {};
    });
    gen.warn_unknown();

    Section be(subsection(doc, "backend", result), "backend", result);
    be.choice("kind", [&](const std::string& s) { cfg.backend.kind = parse_backend_kind(s); });
    be.string("endpoint", cfg.backend.endpoint_url);
    be.string("model", cfg.backend.model_name);
    be.string("api_key", cfg.backend.api_key);
    be.string("kgram_corpus", cfg.kgram_corpus);
    be.field("mock_params", [&](const json& v) -> std::string {
        if (!v.is_object()) {
            return "must be an object of numbers";
        }
        for (const auto& [key, value] : v.items()) {
            if (!value.is_number()) {
                return "value for '" + key + "' must be a number";
            }
            cfg.backend.mock_params[key] = value.get<double>();
        }
        return {};
    });
    std::uint64_t retries = static_cast<std::uint64_t>(cfg.backend.retry.attempts);
    be.positive("retries", retries, 100);
    cfg.backend.retry.attempts = static_cast<int>(retries);
    std::uint64_t backoff = static_cast<std::uint64_t>(cfg.backend.retry.initial_backoff.count());
    be.positive("backoff_ms", backoff);
    cfg.backend.retry.initial_backoff = std::chrono::milliseconds(backoff);
    std::uint64_t timeout = static_cast<std::uint64_t>(cfg.backend.timeout.count());
    be.positive("timeout_ms", timeout);
    cfg.backend.timeout = std::chrono::milliseconds(timeout);
    std::uint64_t conc = cfg.concurrency;
    be.positive("concurrency", conc, 4096);
    cfg.concurrency = static_cast<std::size_t>(conc);
    be.warn_unknown();

    Section an(subsection(doc, "analysis", result), "analysis", result);
    an.positive("min_level_count", cfg.analysis.min_level_count, std::numeric_limits<std::uint64_t>::max());
    an.boolean("exclude_zero", cfg.analysis.exclude_zero);
    an.warn_unknown();

    Section em(subsection(doc, "embedi", result), "embedi", result);
    em.choice("preset", [&](const std::string& s) {
        auto tau = preset_tau_k(s);
        if (!tau) {
            throw std::invalid_argument("unknown preset '" + s + "' (expected 'pythia' or 'olmo2')");
        }
        cfg.embedi.tau_k = *tau;
    });
    em.choice("statistic", [&](const std::string& s) { cfg.embedi.statistic = parse_statistic(s); });
    em.number("tau_k", cfg.embedi.tau_k);
    em.number("tau_m", cfg.embedi.tau_m);
    em.positive("min_samples", cfg.embedi.min_samples, std::numeric_limits<std::uint64_t>::max());
    em.warn_unknown();

    for (auto& issue : check_config(cfg)) {
        result.errors.push_back(std::move(issue));
    }
    return result;
}

std::vector<ConfigIssue> check_config(const EffectiveConfig& cfg) {
    std::vector<ConfigIssue> issues;
    auto check = [&](const char* path, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const Error& e) {
            issues.push_back({path, message_of(e)});
        }
    };
    check("generation", [&] { cfg.effective_generation().validate(); });
    check("backend", [&] { cfg.backend.validate(); });
    check("embedi", [&] { cfg.effective_embedi().validate(); });
    if (cfg.tokenizer.kind == TokenizerKind::Bpe &&
        (cfg.tokenizer.vocab_path.empty() || cfg.tokenizer.merges_path.empty())) {
        issues.push_back({"tokenizer", "bpe needs both vocab and merges paths"});
    }
    return issues;
}

ConfigResult validate_config_file(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        ConfigResult r;
        r.errors.push_back({"", message_of(e)});
        return r;
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        ConfigResult r;
        r.errors.push_back({"", std::string("not valid JSON: ") + e.what()});
        return r;
    }
    return validate_config(doc);
}

nlohmann::ordered_json config_to_json(const EffectiveConfig& cfg) {
    using oj = nlohmann::ordered_json;
    const auto gen = cfg.effective_generation();
    oj j;
    j["prompt_len"] = cfg.run.prompt_len;
    j["answer_len"] = cfg.run.answer_len;
    j["n_samples"] = cfg.run.n_samples;
    j["seed"] = cfg.run.rng_seed;
    j["sampling"] = std::string(to_string(cfg.run.sampling));
    j["filter_mode"] = cfg.analysis.filter_mode == FilterMode::Subsequence ? "subsequence" : "substring";

    oj tok;
    tok["kind"] = std::string(to_string(cfg.tokenizer.kind));
    tok["vocab"] = cfg.tokenizer.vocab_path;
    tok["merges"] = cfg.tokenizer.merges_path;
    tok["unknown_policy"] = cfg.tokenizer.unknown_policy == UnknownPolicy::Error ? "error" : "byte_fallback";
    tok["pretokenize"] = cfg.tokenizer.pretokenize == PreTokenize::Whitespace    ? "whitespace"
                         : cfg.tokenizer.pretokenize == PreTokenize::SpacePrefix ? "space_prefix"
                                                                                 : "none";
    tok["byte_level"] = cfg.tokenizer.byte_level;
    j["tokenizer"] = std::move(tok);

    oj g;
    g["max_tokens"] = gen.max_tokens;
    g["temperature"] = gen.temperature;
    g["top_p"] = gen.top_p;
    g["top_k"] = gen.top_k ? oj(*gen.top_k) : oj(nullptr);
    g["seed"] = gen.seed ? oj(*gen.seed) : oj(nullptr);
    g["decoding"] = gen.greedy() ? "greedy" : "sampled";
    j["generation"] = std::move(g);

    oj b;
    b["kind"] = std::string(to_string(cfg.backend.kind));
    b["endpoint"] = cfg.backend.endpoint_url;
    b["model"] = cfg.backend.model_name;
    if (!cfg.backend.api_key.empty()) {
        b["api_key"] = "<redacted>";
    }
    b["mock_params"] = cfg.backend.mock_params;
    b["retries"] = cfg.backend.retry.attempts;
    b["backoff_ms"] = cfg.backend.retry.initial_backoff.count();
    b["timeout_ms"] = cfg.backend.timeout.count();
    b["concurrency"] = cfg.concurrency;
    b["kgram_corpus"] = cfg.kgram_corpus;
    b["tokenization_mode"] = cfg.backend.kind == BackendKind::Http ? "retokenized" : "token";
    j["backend"] = std::move(b);

    oj a;
    a["min_level_count"] = cfg.analysis.min_level_count;
    a["exclude_zero"] = cfg.analysis.exclude_zero;
    j["analysis"] = std::move(a);

    const auto em = cfg.effective_embedi();
    oj e;
    e["statistic"] = std::string(to_string(em.statistic));
    e["tau_k"] = em.tau_k;
    e["tau_m"] = em.tau_m;
    e["min_samples"] = em.min_samples;
    e["sequence_len"] = em.sequence_len();
    j["embedi"] = std::move(e);
    return j;
}

std::string config_digest(const EffectiveConfig& cfg) {
    return hash_hex(config_to_json(cfg).dump());
}

}  // namespace emlaw
