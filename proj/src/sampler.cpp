#include "emlaw/sampler.hpp"

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "emlaw/error.hpp"
#include "emlaw/tokenize.hpp"
#include "emlaw/util.hpp"

namespace emlaw {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

TokenSequence tokens_from_json(const json& arr, std::string_view what) {
    if (!arr.is_array()) {
        throw Error(ErrorCode::Parse, std::string(what) + " must be an array of token ids");
    }
    TokenSequence out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffULL) {
            throw Error(ErrorCode::Parse, std::string(what) + " holds a value that is not a token id");
        }
        out.push_back(v.get<TokenId>());
    }
    return out;
}

std::string read_maybe_gzip(const std::filesystem::path& path) {
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (!file) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(file, buf, sizeof buf)) > 0) {
        out.append(buf, static_cast<std::size_t>(n));
    }
    const bool failed = n < 0;
    gzclose(file);
    if (failed) {
        throw Error(ErrorCode::Io, "read error in " + path.string());
    }
    return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") != std::string_view::npos) {
            fn(line, lineno);
        }
        pos = end + 1;
    }
}

}  // namespace

std::string_view to_string(SamplingMode mode) noexcept {
    return mode == SamplingMode::DocumentUniform ? "document" : "token";
}

SamplingMode parse_sampling_mode(std::string_view name) {
    if (name == "document") return SamplingMode::DocumentUniform;
    if (name == "token") return SamplingMode::TokenUniform;
    throw Error(ErrorCode::InvalidArgument, "unknown sampling mode '" + std::string(name) + "'");
}

void RunConfig::validate() const {
    if (prompt_len < 1 || answer_len < 1) {
        throw Error(ErrorCode::InvalidArgument, "prompt_len and answer_len must be >= 1");
    }
    if (n_samples < 1) {
        throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    }
}

std::vector<Document> parse_corpus(std::string_view jsonl, Tokenizer& tokenizer, std::string_view origin) {
    std::vector<Document> docs;
    for_each_line(jsonl, [&](std::string_view line, std::size_t lineno) {
        const std::string where = std::string(origin) + ":" + std::to_string(lineno);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Parse, where + ": " + e.what());
        }
        if (!obj.is_object()) {
            throw Error(ErrorCode::Parse, where + ": expected a JSON object");
        }
        Document doc;
        if (auto it = obj.find("id"); it != obj.end() && (it->is_string() || it->is_number())) {
            doc.id = it->is_string() ? it->get<std::string>() : it->dump();
        } else {
            doc.id = "line:" + std::to_string(lineno);
        }
        if (auto it = obj.find("tokens"); it != obj.end()) {
            doc.tokens = tokens_from_json(*it, where + ": tokens");
        } else if (auto txt = obj.find("text"); txt != obj.end() && txt->is_string()) {
            doc.tokens = tokenizer.encode(txt->get<std::string>());
        } else {
            throw Error(ErrorCode::Parse, where + ": needs a \"tokens\" array or a \"text\" string");
        }
        docs.push_back(std::move(doc));
    });
    return docs;
}

std::vector<Document> read_corpus(const std::filesystem::path& path, Tokenizer& tokenizer) {
    return parse_corpus(read_maybe_gzip(path), tokenizer, path.string());
}

std::string window_hash(std::span<const TokenId> window) {
    Fnv1a h;
    h.update(window);
    return h.hex();
}

std::vector<SampleRecord> sample_pairs(std::span<const Document> documents, const RunConfig& cfg) {
    cfg.validate();
    const std::size_t window = cfg.window();
    std::size_t eligible = 0;
    for (const auto& d : documents) {
        eligible += d.tokens.size() > window ? 1 : 0;
    }
    if (eligible == 0) {
        throw Error(ErrorCode::NoEligibleDocuments,
                    "no document is longer than " + std::to_string(window) + " tokens");
    }

    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.rng_seed));
    std::uniform_int_distribution<std::size_t> pick_uniform(0, documents.size() - 1);
    std::discrete_distribution<std::size_t> pick_weighted;
    if (cfg.sampling == SamplingMode::TokenUniform) {
        std::vector<double> weights;
        weights.reserve(documents.size());
        for (const auto& d : documents) {
            weights.push_back(static_cast<double>(d.tokens.size()));
        }
        pick_weighted = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
    }

    std::vector<SampleRecord> records;
    records.reserve(cfg.n_samples);
    std::uint64_t rejections = 0;
    const std::uint64_t max_rejections = 100 * cfg.n_samples;
    while (records.size() < cfg.n_samples) {
        const std::size_t di =
            cfg.sampling == SamplingMode::TokenUniform ? pick_weighted(rng) : pick_uniform(rng);
        const auto& doc = documents[di];
        if (doc.tokens.size() <= window) {
            if (++rejections > max_rejections) {
                throw Error(ErrorCode::SamplingStalled,
                            std::to_string(rejections) + " rejected draws after " +
                                std::to_string(records.size()) + " accepted");
            }
            continue;
        }
        const std::size_t start =
            std::uniform_int_distribution<std::size_t>(0, doc.tokens.size() - window)(rng);
        const auto first = doc.tokens.begin() + static_cast<std::ptrdiff_t>(start);
        SampleRecord rec;
        rec.id = records.size();
        rec.prompt.assign(first, first + cfg.prompt_len);
        rec.answer.assign(first + cfg.prompt_len, first + static_cast<std::ptrdiff_t>(window));
        rec.source_doc = doc.id;
        rec.window_hash = window_hash(std::span<const TokenId>(&*first, window));
        records.push_back(std::move(rec));
    }
    return records;
}

FilterPartition apply_filter(std::vector<SampleRecord> records, FilterMode mode) {
    FilterPartition out;
    for (auto& rec : records) {
        const auto d = trivial_filter(rec.prompt, rec.answer, mode);
        rec.lcs = d.lcs_length;
        rec.filtered = d.excluded;
        (d.excluded ? out.excluded : out.retained).push_back(std::move(rec));
    }
    return out;
}

std::string record_to_json(const SampleRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["prompt"] = r.prompt;
    j["answer"] = r.answer;
    j["response"] = r.response ? ordered_json(*r.response) : ordered_json(nullptr);
    j["lcs"] = r.lcs ? ordered_json(*r.lcs) : ordered_json(nullptr);
    j["distance"] = r.distance ? ordered_json(*r.distance) : ordered_json(nullptr);
    j["filtered"] = r.filtered ? ordered_json(*r.filtered) : ordered_json(nullptr);
    j["source_doc"] = r.source_doc ? ordered_json(*r.source_doc) : ordered_json(nullptr);
    j["window_hash"] = r.window_hash;
    return j.dump();
}

SampleRecord record_from_json(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned()) {
        throw Error(ErrorCode::Parse, "record needs an unsigned integer \"id\"");
    }
    if (!j.contains("prompt") || !j.contains("answer")) {
        throw Error(ErrorCode::Parse, "record needs \"prompt\" and \"answer\" token arrays");
    }
    SampleRecord r;
    r.id = j["id"].get<std::uint64_t>();
    r.prompt = tokens_from_json(j["prompt"], "prompt");
    r.answer = tokens_from_json(j["answer"], "answer");
    auto opt = [&](const char* key) -> const json* {
        auto it = j.find(key);
        return it == j.end() || it->is_null() ? nullptr : &*it;
    };
    if (const auto* v = opt("response")) r.response = tokens_from_json(*v, "response");
    if (const auto* v = opt("lcs")) r.lcs = v->get<std::uint32_t>();
    if (const auto* v = opt("distance")) r.distance = v->get<std::uint32_t>();
    if (const auto* v = opt("filtered")) r.filtered = v->get<bool>();
    if (const auto* v = opt("source_doc")) r.source_doc = v->get<std::string>();
    if (const auto* v = opt("window_hash")) r.window_hash = v->get<std::string>();
    return r;
}

std::string write_records(std::span<const SampleRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r);
        out += '\n';
    }
    return out;
}

std::vector<SampleRecord> parse_records(std::string_view jsonl, std::string_view origin) {
    std::vector<SampleRecord> out;
    for_each_line(jsonl, [&](std::string_view line, std::size_t lineno) {
        try {
            out.push_back(record_from_json(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

std::vector<SampleRecord> read_records(const std::filesystem::path& path) {
    return parse_records(read_maybe_gzip(path), path.string());
}

}  // namespace emlaw
