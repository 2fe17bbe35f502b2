#include "emlaw/pipeline.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "emlaw/error.hpp"
#include "emlaw/tokenize.hpp"

namespace emlaw {

const char* const kNormalizationNote =
    "level-set probabilities are normalised by the level set's own token count "
    "(instances x |s|); entropies are in bits (log base 2)";

namespace {

constexpr std::size_t kFailureSamples = 5;

bool is_filtered(const SampleRecord& rec, FilterMode mode) {
    if (rec.filtered) {
        return *rec.filtered;
    }
    return trivial_filter(rec.prompt, rec.answer, mode).excluded;
}

// Retained records with a known distance; counts the rest.
std::vector<SampleRecord> scored_retained(std::span<const SampleRecord> records, FilterMode mode,
                                          RecordCounts& counts) {
    counts = {};
    counts.total = records.size();
    std::vector<SampleRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (is_filtered(rec, mode)) {
            ++counts.filtered;
            continue;
        }
        if (!rec.distance && !rec.response) {
            ++counts.unscored;
            continue;
        }
        auto copy = rec;
        if (!copy.distance) {
            copy.distance = levenshtein(*copy.response, copy.answer);
        }
        out.push_back(std::move(copy));
    }
    counts.scored = out.size();
    return out;
}

}  // namespace

GenerationStats generate_responses(std::vector<SampleRecord>& records, const Backend& backend,
                                   Tokenizer& tokenizer, const GenerationConfig& cfg,
                                   std::size_t concurrency,
                                   const std::function<void(const SampleRecord&)>& on_record,
                                   const std::atomic<bool>* cancel) {
    cfg.validate();
    GenerationStats stats;
    std::vector<std::size_t> targets;
    std::vector<GenerationJob> jobs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& rec = records[i];
        if (rec.filtered.value_or(false)) {
            ++stats.skipped_filtered;
        } else if (rec.response) {
            ++stats.already_present;
        } else {
            targets.push_back(i);
            jobs.push_back({rec.id, rec.prompt, rec.answer});
        }
    }
    stats.requested = jobs.size();

    // Byte and BPE encoding are pure, so text responses can be tokenized as
    // they arrive. The whitespace tokenizer assigns ids on first sight and
    // must see responses in record order.
    const bool encode_now = backend.token_native() || tokenizer.kind() != TokenizerKind::Whitespace;
    auto finish = [&](SampleRecord& rec, GenerationResult& result) {
        if (!backend.token_native()) {
            result.response_tokens = tokenizer.encode(result.response_text.value_or(""));
        }
        if (result.response_tokens.size() > cfg.max_tokens) {
            result.response_tokens.resize(cfg.max_tokens);
        }
        rec.response = std::move(result.response_tokens);
        rec.distance.reset();
        if (on_record) {
            on_record(rec);
        }
    };

    auto outcomes = generate_batch(
        backend, jobs, cfg, concurrency,
        [&](std::size_t i, const GenerationOutcome& outcome) {
            if (!encode_now || !std::holds_alternative<GenerationResult>(outcome)) {
                return;
            }
            auto result = std::get<GenerationResult>(outcome);
            finish(records[targets[i]], result);
        },
        cancel);

    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (auto* failure = std::get_if<GenerationFailure>(&outcomes[i])) {
            ++stats.failed;
            if (stats.failure_samples.size() < kFailureSamples) {
                stats.failure_samples.push_back("record " + std::to_string(jobs[i].id) + ": " +
                                                failure->message);
            }
            continue;
        }
        ++stats.succeeded;
        if (!encode_now) {
            finish(records[targets[i]], std::get<GenerationResult>(outcomes[i]));
        }
    }
    return stats;
}

std::size_t score_records(std::vector<SampleRecord>& records) {
    std::size_t scored = 0;
    for (auto& rec : records) {
        if (rec.response) {
            rec.distance = levenshtein(*rec.response, rec.answer);
            ++scored;
        }
    }
    return scored;
}

EmLawReport analyze_emlaw(std::span<const SampleRecord> records, const AnalysisOptions& opts) {
    EmLawReport report;
    report.options = opts;
    report.normalization_note = kNormalizationNote;
    const auto scored = scored_retained(records, opts.filter_mode, report.counts);

    const auto sets = build_level_sets(scored);
    for (const auto& [e, set] : sets) {
        if (set.instances < std::max<std::uint64_t>(opts.min_level_count, 1)) {
            continue;
        }
        const auto est = level_set_entropy(set.tokens);
        report.levels.push_back({e, set.instances, est.support_size, est.bits, est.normalized});
    }
    if (report.levels.size() < 2) {
        std::string which;
        for (const auto& l : report.levels) {
            which += (which.empty() ? " (e = " : ", ") + std::to_string(l.e);
        }
        if (!which.empty()) {
            which += ")";
        }
        throw Error(ErrorCode::InsufficientLevelSets,
                    "need at least 2 non-empty level sets for a fit, found " +
                        std::to_string(report.levels.size()) + which);
    }

    std::vector<ScatterPoint> points;
    std::vector<ScatterPoint> nonzero;
    for (const auto& l : report.levels) {
        points.push_back({static_cast<double>(l.e), l.entropy_bits, 1.0});
        if (l.e != 0) {
            nonzero.push_back(points.back());
        }
    }
    report.regression = fit_ols(points);
    if (opts.exclude_zero) {
        if (nonzero.size() >= 2) {
            report.regression_excluding_zero = fit_ols(nonzero);
        } else {
            report.warnings.push_back("fewer than 2 level sets remain without e = 0; no second fit");
        }
    }
    return report;
}

EmLawReport run_emlaw(std::vector<SampleRecord>& records, const Backend& backend, Tokenizer& tokenizer,
                      const GenerationConfig& cfg, const AnalysisOptions& opts, std::size_t concurrency) {
    const auto stats = generate_responses(records, backend, tokenizer, cfg, concurrency);
    score_records(records);
    auto report = analyze_emlaw(records, opts);
    report.generation_failures = stats.failed;
    return report;
}

InstancewiseResult analyze_instancewise(std::span<const SampleRecord> records, const AnalysisOptions& opts) {
    InstancewiseResult out;
    const auto scored = scored_retained(records, opts.filter_mode, out.counts);
    std::vector<ScatterPoint> points;
    for (const auto& rec : scored) {
        const auto est = instance_entropy(rec.answer);
        out.points.push_back({rec.id, *rec.distance, est.bits, est.support_size});
        points.push_back({static_cast<double>(*rec.distance), est.bits, 1.0});
    }
    try {
        out.regression = fit_ols(points);
    } catch (const Error& e) {
        out.regression_error = e.what();
    }
    return out;
}

InstancewiseResult run_instancewise(std::vector<SampleRecord>& records, const Backend& backend,
                                    Tokenizer& tokenizer, const GenerationConfig& cfg,
                                    const AnalysisOptions& opts, std::size_t concurrency) {
    const auto stats = generate_responses(records, backend, tokenizer, cfg, concurrency);
    score_records(records);
    auto out = analyze_instancewise(records, opts);
    out.generation_failures = stats.failed;
    return out;
}

std::map<std::uint64_t, GibberishLabel> parse_labels(std::string_view jsonl) {
    std::map<std::uint64_t, GibberishLabel> labels;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < jsonl.size()) {
        auto end = jsonl.find('\n', pos);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        auto line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        const std::string where = "labels:" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::Parse, where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned() ||
            !j.contains("label") || !j["label"].is_string()) {
            throw Error(ErrorCode::Parse, where + ": expected {\"id\": <n>, \"label\": <string>}");
        }
        const auto label = j["label"].get<std::string>();
        GibberishLabel value;
        if (label == "gibberish") {
            value = GibberishLabel::Gibberish;
        } else if (label == "non_gibberish") {
            value = GibberishLabel::NonGibberish;
        } else {
            throw Error(ErrorCode::Parse, where + ": unknown label '" + label + "'");
        }
        labels[j["id"].get<std::uint64_t>()] = value;
    }
    return labels;
}

namespace {

std::optional<GibberishRow> gibberish_row(std::string name, const std::vector<const SampleRecord*>& members,
                                          const Tokenizer& tokenizer) {
    if (members.empty()) {
        return std::nullopt;
    }
    EmpiricalDistribution tokens;
    std::vector<std::string> texts;
    for (const auto* rec : members) {
        for (TokenId t : rec->answer) {
            tokens.add(t);
        }
        texts.push_back(tokenizer.decode(rec->answer));
    }
    GibberishRow row;
    row.set_name = std::move(name);
    row.instances = members.size();
    const auto tok = shannon_entropy(tokens);
    row.unique_tokens = tok.support_size;
    row.entropy_tokens = tok.bits;
    row.normalized_tokens = tok.normalized;
    const auto chars = char_histogram(texts);
    row.total_chars = chars.total;
    if (!chars.empty()) {
        const auto ch = shannon_entropy(chars);
        row.unique_chars = ch.support_size;
        row.entropy_chars = ch.bits;
        row.normalized_chars = ch.normalized;
    }
    return row;
}

}  // namespace

GibberishReport run_gibberish(std::span<const SampleRecord> records,
                              const std::map<std::uint64_t, GibberishLabel>& labels,
                              const Tokenizer& tokenizer) {
    std::map<std::uint64_t, const SampleRecord*> by_id;
    for (const auto& rec : records) {
        by_id.emplace(rec.id, &rec);
    }
    for (const auto& [id, label] : labels) {
        if (!by_id.contains(id)) {
            throw Error(ErrorCode::UnknownLabel, "label references unknown record " + std::to_string(id));
        }
    }

    std::vector<const SampleRecord*> zero, gib, non_gib, non_gib_zero;
    for (const auto& [id, rec] : by_id) {
        const bool at_zero = rec->distance && *rec->distance == 0;
        if (at_zero) {
            zero.push_back(rec);
        }
        auto it = labels.find(id);
        if (it == labels.end()) {
            continue;
        }
        if (it->second == GibberishLabel::Gibberish) {
            gib.push_back(rec);
        } else {
            non_gib.push_back(rec);
            if (at_zero) {
                non_gib_zero.push_back(rec);
            }
        }
    }

    GibberishReport report;
    const std::pair<const char*, const std::vector<const SampleRecord*>*> sets[] = {
        {"zero_distance", &zero},
        {"gibberish", &gib},
        {"non_gibberish", &non_gib},
        {"non_gibberish_zero_distance", &non_gib_zero},
    };
    for (const auto& [name, members] : sets) {
        if (auto row = gibberish_row(name, *members, tokenizer)) {
            report.rows.push_back(std::move(*row));
        } else {
            report.warnings.push_back(std::string("set '") + name + "' is empty; row omitted");
        }
    }
    return report;
}

double gibberish_score(std::string_view text) {
    const auto chars = char_units(text);
    if (chars.empty()) {
        return 0.0;
    }
    std::size_t upper = 0, lower = 0, digit = 0, runs = 0;
    bool in_run = false;
    for (char32_t c : chars) {
        upper += (c >= U'A' && c <= U'Z') ? 1 : 0;
        lower += (c >= U'a' && c <= U'z') ? 1 : 0;
        digit += (c >= U'0' && c <= U'9') ? 1 : 0;
        const bool space = c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
        if (!space && !in_run) {
            ++runs;
        }
        in_run = !space;
    }
    const double n = static_cast<double>(chars.size());
    const auto share = [n](std::size_t k) { return static_cast<double>(k) / n >= 0.10; };

    bool repeated = false;
    std::set<std::u32string> grams;
    for (std::size_t i = 0; i + 4 <= chars.size() && !repeated; ++i) {
        repeated = !grams.emplace(chars.begin() + static_cast<std::ptrdiff_t>(i),
                                  chars.begin() + static_cast<std::ptrdiff_t>(i + 4))
                        .second;
    }

    double score = 0.0;
    score += (share(upper) && share(lower) && share(digit)) ? 0.25 : 0.0;
    score += runs < 2 ? 0.25 : 0.0;
    score += repeated ? 0.0 : 0.25;
    score += chars.size() >= 32 ? 0.25 : 0.0;
    return score;
}

std::vector<GibberishCandidate> flag_gibberish_candidates(std::span<const SampleRecord> records,
                                                          const Tokenizer& tokenizer) {
    std::vector<GibberishCandidate> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        out.push_back({rec.id, gibberish_score(tokenizer.decode(rec.answer))});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.score > b.score || (a.score == b.score && a.id < b.id);
    });
    return out;
}

}  // namespace emlaw
