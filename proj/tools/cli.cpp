#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emlaw/backend.hpp"
#include "emlaw/config.hpp"
#include "emlaw/embedi.hpp"
#include "emlaw/error.hpp"
#include "emlaw/pipeline.hpp"
#include "emlaw/report.hpp"
#include "emlaw/sampler.hpp"
#include "emlaw/tokenize.hpp"
#include "emlaw/util.hpp"

namespace emlaw::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) {
    g_interrupted.store(true);
}

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raw flag values; an option only overrides the config when it was given.
struct Flags {
    std::string config;
    std::string input, out, records, suspect, evidence, csv, svg, labels;
    std::uint64_t n = 0;
    std::int64_t seed = 0;
    std::uint32_t prompt_len = 0, answer_len = 0;
    std::string sampling;
    std::string tokenizer, vocab, merges;
    std::string backend, endpoint, model, api_key;
    std::vector<std::string> mock_params;
    double temperature = 0, top_p = 0;
    std::uint32_t top_k = 0, max_tokens = 0;
    std::int64_t gen_seed = 0;
    std::size_t concurrency = 0;
    double tau_k = 0, tau_m = 0;
    std::string statistic, preset;
    bool exclude_zero = false;
    std::uint64_t min_level_count = 0;
    std::uint64_t min_samples = 0;

    // "name@subcommand" -> option, to tell explicit flags from defaults
    std::map<std::string, CLI::Option*> given;
};

template <typename T>
void add(CLI::App* sub, Flags& f, const std::string& name, T& target, const std::string& help) {
    f.given[name + "@" + sub->get_name()] = sub->add_option("--" + name, target, help);
}

void add_flag(CLI::App* sub, Flags& f, const std::string& name, bool& target, const std::string& help) {
    f.given[name + "@" + sub->get_name()] = sub->add_flag("--" + name, target, help);
}

void add_config(CLI::App* sub, Flags& f) {
    add(sub, f, "config", f.config, "JSON config file; flags override its values");
}

void add_corpus(CLI::App* sub, Flags& f) {
    add(sub, f, "n", f.n, "number of prompt/answer pairs to sample");
    add(sub, f, "seed", f.seed, "sampling seed");
    add(sub, f, "prompt-len", f.prompt_len, "prompt length |p| in tokens");
    add(sub, f, "answer-len", f.answer_len, "answer length |s| in tokens");
    add(sub, f, "sampling", f.sampling, "document | token");
}

void add_tokenizer(CLI::App* sub, Flags& f) {
    add(sub, f, "tokenizer", f.tokenizer, "byte | whitespace | bpe");
    add(sub, f, "vocab", f.vocab, "BPE vocab JSON, or whitespace session vocabulary");
    add(sub, f, "merges", f.merges, "BPE merges file");
}

void add_backend(CLI::App* sub, Flags& f) {
    add(sub, f, "backend", f.backend,
        "http | mock_perfect | mock_uniform | mock_entropy_noise | mock_kgram");
    add(sub, f, "endpoint", f.endpoint, "completion server base URL");
    add(sub, f, "model", f.model, "model name sent to the server");
    add(sub, f, "api-key", f.api_key, "bearer token (default: $EMLAW_API_KEY)");
    add(sub, f, "temperature", f.temperature, "sampling temperature (0 = greedy)");
    add(sub, f, "top-p", f.top_p, "nucleus sampling mass");
    add(sub, f, "top-k", f.top_k, "top-k cutoff");
    add(sub, f, "max-tokens", f.max_tokens, "response length |r| (default |s|)");
    add(sub, f, "gen-seed", f.gen_seed, "generation seed");
    add(sub, f, "concurrency", f.concurrency, "in-flight generation requests");
    sub->add_option("--mock-param", f.mock_params, "mock parameter key=value (repeatable)");
    f.given["mock-param@" + sub->get_name()] = sub->get_option("--mock-param");
}

void add_analysis(CLI::App* sub, Flags& f) {
    add(sub, f, "min-level-count", f.min_level_count, "drop level sets with fewer instances");
    add_flag(sub, f, "exclude-zero", f.exclude_zero, "also fit without the e = 0 point");
    add(sub, f, "svg", f.svg, "write an SVG plot here");
    add(sub, f, "csv", f.csv, "scatter CSV path (default: --out with .csv)");
}

void add_embedi(CLI::App* sub, Flags& f) {
    add(sub, f, "tau-k", f.tau_k, "intercept threshold");
    add(sub, f, "tau-m", f.tau_m, "slope threshold");
    add(sub, f, "statistic", f.statistic, "intercept | slope");
    add(sub, f, "preset", f.preset, "threshold preset: pythia (tau_k 0) | olmo2 (tau_k 3)");
}

bool given(const Flags& f, const CLI::App* sub, const std::string& name) {
    auto it = f.given.find(name + "@" + sub->get_name());
    return it != f.given.end() && it->second->count() > 0;
}

EffectiveConfig resolve_config(const Flags& f, const CLI::App* sub, std::ostream& err) {
    ConfigResult result;
    if (!f.config.empty()) {
        result = validate_config_file(f.config);
    } else {
        result = validate_config(json::object());
    }
    for (const auto& w : result.warnings) {
        err << "warning: config " << w.path << ": " << w.message << "\n";
    }
    if (!result.ok()) {
        std::string msg = "invalid config";
        for (const auto& e : result.errors) {
            msg += "\n  " + (e.path.empty() ? std::string("<root>") : e.path) + ": " + e.message;
        }
        throw UsageError(msg);
    }
    auto cfg = result.config;
    auto has = [&](const char* name) { return given(f, sub, name); };

    if (has("n")) cfg.run.n_samples = f.n;
    if (has("seed")) cfg.run.rng_seed = f.seed;
    if (has("prompt-len")) cfg.run.prompt_len = f.prompt_len;
    if (has("answer-len")) cfg.run.answer_len = f.answer_len;
    if (has("sampling")) cfg.run.sampling = parse_sampling_mode(f.sampling);
    if (has("tokenizer")) cfg.tokenizer.kind = parse_tokenizer_kind(f.tokenizer);
    if (has("vocab")) cfg.tokenizer.vocab_path = f.vocab;
    if (has("merges")) cfg.tokenizer.merges_path = f.merges;
    if (has("backend")) cfg.backend.kind = parse_backend_kind(f.backend);
    if (has("endpoint")) {
        cfg.backend.endpoint_url = f.endpoint;
        if (!has("backend")) cfg.backend.kind = BackendKind::Http;
    }
    if (has("model")) cfg.backend.model_name = f.model;
    if (has("api-key")) {
        cfg.backend.api_key = f.api_key;
    } else if (cfg.backend.api_key.empty()) {
        if (const char* env = std::getenv("EMLAW_API_KEY")) cfg.backend.api_key = env;
    }
    if (has("temperature")) cfg.generation.temperature = f.temperature;
    if (has("top-p")) cfg.generation.top_p = f.top_p;
    if (has("top-k")) cfg.generation.top_k = f.top_k;
    if (has("max-tokens")) {
        cfg.generation.max_tokens = f.max_tokens;
        cfg.max_tokens_explicit = true;
    }
    if (has("gen-seed")) cfg.generation.seed = f.gen_seed;
    if (has("concurrency")) cfg.concurrency = f.concurrency;
    if (has("mock-param")) {
        for (const auto& kv : f.mock_params) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--mock-param expects key=value, got " + kv);
            try {
                cfg.backend.mock_params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw UsageError("--mock-param value must be numeric: " + kv);
            }
        }
    }
    if (has("min-level-count")) cfg.analysis.min_level_count = f.min_level_count;
    if (has("exclude-zero")) cfg.analysis.exclude_zero = f.exclude_zero;
    if (has("preset")) {
        auto tau = preset_tau_k(f.preset);
        if (!tau) throw UsageError("unknown --preset '" + f.preset + "'");
        cfg.embedi.tau_k = *tau;
    }
    if (has("tau-k")) cfg.embedi.tau_k = f.tau_k;
    if (has("tau-m")) cfg.embedi.tau_m = f.tau_m;
    if (has("statistic")) cfg.embedi.statistic = parse_statistic(f.statistic);
    if (has("min-samples")) cfg.embedi.min_samples = f.min_samples;

    auto issues = check_config(cfg);
    if (!issues.empty()) {
        std::string msg = "invalid settings";
        for (const auto& e : issues) msg += "\n  " + e.path + ": " + e.message;
        throw UsageError(msg);
    }
    return cfg;
}

ordered_json metadata(const EffectiveConfig& cfg, const std::vector<std::string>& inputs) {
    ordered_json m;
    m["tool"] = "emlaw";
    m["version"] = kToolVersion;
    m["config_digest"] = config_digest(cfg);
    ordered_json files = ordered_json::object();
    for (const auto& path : inputs) {
        if (!path.empty() && fs::exists(path)) {
            files[path] = hash_file(path);
        }
    }
    m["inputs"] = std::move(files);
    return m;
}

// JSONL, CSV and SVG carry their metadata in a sidecar file.
void write_with_sidecar(const fs::path& path, const std::string& contents, const ordered_json& meta,
                        const EffectiveConfig& cfg) {
    write_file_atomic(path, contents);
    ordered_json side;
    side["metadata"] = meta;
    side["metadata"]["output_hash"] = hash_hex(contents);
    side["config"] = config_to_json(cfg);
    auto side_path = path;
    side_path += ".meta.json";
    write_file_atomic(side_path, side.dump(2) + "\n");
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required ") + flag);
    return value;
}

fs::path with_extension(const std::string& path, const char* ext) {
    fs::path p(path);
    p.replace_extension(ext);
    return p;
}

void save_session_vocab(const Tokenizer& tok, const EffectiveConfig& cfg) {
    if (tok.kind() == TokenizerKind::Whitespace && !cfg.tokenizer.vocab_path.empty()) {
        write_file_atomic(cfg.tokenizer.vocab_path, tok.vocab_json() + "\n");
    }
}

std::unique_ptr<Backend> build_backend(const EffectiveConfig& cfg, Tokenizer& tok,
                                       std::span<const SampleRecord> records) {
    MockContext ctx;
    if (cfg.backend.kind == BackendKind::MockKgram) {
        if (!cfg.kgram_corpus.empty()) {
            for (auto& doc : read_corpus(cfg.kgram_corpus, tok)) {
                ctx.kgram_training.push_back(std::move(doc.tokens));
            }
        } else {
            for (const auto& rec : records) {
                TokenSequence window = rec.prompt;
                window.insert(window.end(), rec.answer.begin(), rec.answer.end());
                ctx.kgram_training.push_back(std::move(window));
            }
        }
    }
    return make_backend(cfg.backend, tok, ctx);
}

// --- subcommands -----------------------------------------------------------

int cmd_sample(const Flags& f, const EffectiveConfig& cfg, std::ostream&, std::ostream& err) {
    auto tok = make_tokenizer(cfg.tokenizer);
    const auto input = require(f.input, "--input");
    const auto out = require(f.out, "--out");
    auto docs = read_corpus(input, tok);
    auto records = sample_pairs(docs, cfg.run);
    auto parts = apply_filter(std::move(records), cfg.analysis.filter_mode);
    err << "sampled " << cfg.run.n_samples << " pairs from " << docs.size() << " documents; retained "
        << parts.retained.size() << ", excluded " << parts.excluded.size() << " as trivial\n";
    std::vector<SampleRecord> all = std::move(parts.retained);
    all.insert(all.end(), parts.excluded.begin(), parts.excluded.end());
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    write_with_sidecar(out, write_records(all), metadata(cfg, {input}), cfg);
    save_session_vocab(tok, cfg);
    return 0;
}

int cmd_generate(const Flags& f, const EffectiveConfig& cfg, std::ostream&, std::ostream& err) {
    const auto in = require(f.records, "--records");
    const std::string out = f.out.empty() ? in : f.out;
    auto tok = make_tokenizer(cfg.tokenizer);
    auto records = read_records(in);

    // Resume: pick up responses from an earlier output and its journal.
    std::map<std::uint64_t, SampleRecord*> by_id;
    for (auto& r : records) by_id[r.id] = &r;
    auto merge_from = [&](const fs::path& path) {
        if (!fs::exists(path)) return;
        for (auto& prev : read_records(path)) {
            auto it = by_id.find(prev.id);
            if (it != by_id.end() && !it->second->response && prev.response) {
                it->second->response = std::move(prev.response);
            }
        }
    };
    if (out != in) merge_from(out);
    const fs::path journal = fs::path(out).string() + ".partial";
    merge_from(journal);

    auto backend = build_backend(cfg, tok, records);
    std::ofstream journal_out(journal, std::ios::app);
    auto stats = generate_responses(
        records, *backend, tok, cfg.effective_generation(), cfg.concurrency,
        [&](const SampleRecord& rec) { journal_out << record_to_json(rec) << '\n' << std::flush; },
        &g_interrupted);
    journal_out.close();

    err << "generated " << stats.succeeded << " of " << stats.requested << " requested ("
        << stats.already_present << " already present, " << stats.skipped_filtered
        << " filtered, " << stats.failed << " failed)\n";
    for (const auto& msg : stats.failure_samples) err << "  failure: " << msg << "\n";

    write_with_sidecar(out, write_records(records), metadata(cfg, {in}), cfg);
    save_session_vocab(tok, cfg);
    if (g_interrupted.load()) {
        err << "interrupted; partial results kept in " << journal.string() << "\n";
        return 1;
    }
    fs::remove(journal);
    if (stats.requested > 0 && stats.succeeded == 0) {
        err << "error: every generation request failed\n";
        return 1;
    }
    return 0;
}

int cmd_score(const Flags& f, const EffectiveConfig& cfg, std::ostream&, std::ostream& err) {
    const auto in = require(f.records, "--records");
    const std::string out = f.out.empty() ? in : f.out;
    auto records = read_records(in);
    const auto n = score_records(records);
    err << "scored " << n << " of " << records.size() << " records\n";
    write_with_sidecar(out, write_records(records), metadata(cfg, {in}), cfg);
    return 0;
}

std::vector<ScatterPoint> level_points(std::span<const LevelSetReport> levels) {
    std::vector<ScatterPoint> pts;
    for (const auto& l : levels) pts.push_back({static_cast<double>(l.e), l.entropy_bits, 1.0});
    return pts;
}

int cmd_emlaw(const Flags& f, const EffectiveConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = require(f.records, "--records");
    auto records = read_records(in);
    const auto report = analyze_emlaw(records, cfg.analysis);
    auto meta = metadata(cfg, {in});
    auto doc = emlaw_report_to_json(report, config_to_json(cfg));
    doc["metadata"] = meta;
    const std::string text = doc.dump(2) + "\n";
    if (f.out.empty()) {
        out << text;
    } else {
        write_file_atomic(f.out, text);
    }
    const std::string csv_path = !f.csv.empty() ? f.csv : (f.out.empty() ? "" : with_extension(f.out, ".csv").string());
    if (!csv_path.empty()) {
        write_with_sidecar(csv_path, levels_csv(report.levels), meta, cfg);
    }
    if (!f.svg.empty()) {
        write_with_sidecar(f.svg, render_svg(level_points(report.levels), report.regression, {}, meta.dump()),
                           meta, cfg);
    }
    err << report.levels.size() << " level sets; slope " << report.regression.slope << ", intercept "
        << report.regression.intercept << ", r " << report.regression.pearson_r << "\n";
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    return 0;
}

int cmd_instancewise(const Flags& f, const EffectiveConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = require(f.records, "--records");
    auto records = read_records(in);
    const auto result = analyze_instancewise(records, cfg.analysis);
    auto meta = metadata(cfg, {in});
    auto doc = instancewise_to_json(result, config_to_json(cfg));
    doc["metadata"] = meta;
    const std::string text = doc.dump(2) + "\n";
    if (f.out.empty()) {
        out << text;
    } else {
        write_file_atomic(f.out, text);
    }
    const std::string csv_path = !f.csv.empty() ? f.csv : (f.out.empty() ? "" : with_extension(f.out, ".csv").string());
    if (!csv_path.empty()) {
        write_with_sidecar(csv_path, instancewise_csv(result.points), meta, cfg);
    }
    if (!f.svg.empty()) {
        std::vector<ScatterPoint> pts;
        for (const auto& p : result.points) pts.push_back({static_cast<double>(p.distance), p.entropy_bits, 1.0});
        PlotLabels labels;
        labels.title = "Instance-wise entropy vs. memorization score";
        write_with_sidecar(f.svg, render_svg(pts, result.regression, labels, meta.dump()), meta, cfg);
    }
    if (!result.regression) {
        err << "warning: regression not fitted: " << result.regression_error << "\n";
    }
    return 0;
}

int cmd_gibberish(const Flags& f, const EffectiveConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = require(f.records, "--records");
    auto records = read_records(in);
    auto tok = make_tokenizer(cfg.tokenizer);
    ordered_json doc;
    if (!f.labels.empty()) {
        const auto labels = parse_labels(read_file(f.labels));
        const auto report = run_gibberish(records, labels, tok);
        doc = gibberish_report_to_json(report);
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    } else {
        ordered_json cands = ordered_json::array();
        for (const auto& c : flag_gibberish_candidates(records, tok)) {
            ordered_json j;
            j["id"] = c.id;
            j["score"] = c.score;
            cands.push_back(std::move(j));
        }
        doc["candidates"] = std::move(cands);
        doc["note"] = "heuristic triage only; supply --labels for the statistics table";
    }
    doc["metadata"] = metadata(cfg, {in, f.labels});
    const std::string text = doc.dump(2) + "\n";
    if (f.out.empty()) {
        out << text;
    } else {
        write_file_atomic(f.out, text);
    }
    return 0;
}

int cmd_embedi(const Flags& f, const EffectiveConfig& cfg, std::ostream& out, std::ostream& err) {
    const std::string suspect = !f.suspect.empty() ? f.suspect : require(f.input, "--suspect");
    auto tok = make_tokenizer(cfg.tokenizer);
    auto docs = read_corpus(suspect, tok);
    std::vector<SampleRecord> windows;
    if (cfg.backend.kind == BackendKind::MockKgram && cfg.kgram_corpus.empty()) {
        for (const auto& d : docs) {
            SampleRecord r;
            r.prompt = d.tokens;
            windows.push_back(std::move(r));
        }
    }
    auto backend = build_backend(cfg, tok, windows);
    const auto em = cfg.effective_embedi();
    const auto verdict = infer_membership(docs, *backend, tok, em, cfg.effective_generation(), cfg.run.rng_seed,
                                          cfg.analysis, cfg.concurrency);

    const std::string evidence = !f.evidence.empty()
                                     ? f.evidence
                                     : (f.out.empty() ? std::string("embedi-evidence.json")
                                                      : with_extension(f.out, ".evidence.json").string());
    auto meta = metadata(cfg, {suspect});
    auto ev = emlaw_report_to_json(verdict.evidence, config_to_json(cfg));
    ev["metadata"] = meta;
    write_file_atomic(evidence, ev.dump(2) + "\n");
    write_with_sidecar(with_extension(evidence, ".csv"), levels_csv(verdict.evidence.levels), meta, cfg);

    auto doc = verdict_to_json(verdict, evidence);
    const std::string text = doc.dump(2) + "\n";
    out << text;
    if (!f.out.empty()) {
        ordered_json full = doc;
        full["metadata"] = meta;
        write_file_atomic(f.out, full.dump(2) + "\n");
    }
    err << "verdict " << verdict.label << " (" << to_string(verdict.statistic) << " " << verdict.value
        << (verdict.label ? " > " : " <= ") << verdict.threshold << ")\n";
    return 0;
}

int cmd_plot(const Flags& f, const EffectiveConfig& cfg, std::ostream& out, std::ostream&) {
    const auto in = require(f.input, "--input");
    const auto text = read_file(in);
    std::vector<LevelSetReport> levels;
    if (fs::path(in).extension() == ".json") {
        const auto doc = json::parse(text);
        for (const auto& l : doc.at("levels")) {
            LevelSetReport r;
            r.e = l.at("e").get<std::uint32_t>();
            r.count = l.at("count").get<std::uint64_t>();
            r.unique_tokens = l.at("unique_tokens").get<std::size_t>();
            r.entropy_bits = l.at("entropy_bits").get<double>();
            r.normalized = l.at("normalized").get<double>();
            levels.push_back(r);
        }
    } else {
        levels = parse_levels_csv(text);
    }
    const auto pts = level_points(levels);
    std::optional<RegressionReport> fit;
    if (pts.size() >= 2) fit = fit_ols(pts);
    auto meta = metadata(cfg, {in});
    const auto svg = render_svg(pts, fit, {}, meta.dump());
    const std::string target = !f.svg.empty() ? f.svg : f.out;
    if (target.empty()) {
        out << svg;
    } else {
        write_with_sidecar(target, svg, meta, cfg);
    }
    return 0;
}

int cmd_validate(const Flags& f, std::ostream& out, std::ostream& err) {
    auto result = f.config.empty() ? validate_config(json::object()) : validate_config_file(f.config);
    for (const auto& w : result.warnings) err << "warning: " << w.path << ": " << w.message << "\n";
    for (const auto& e : result.errors) err << "error: " << (e.path.empty() ? "<root>" : e.path) << ": " << e.message << "\n";
    if (!result.ok()) return 2;
    out << config_to_json(result.config).dump(2) << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Entropy-memorization analysis: sample, generate, score, fit, infer dataset membership"};
    app.require_subcommand(1);
    Flags f;

    auto* sample = app.add_subcommand("sample", "sample prompt/answer pairs from a corpus");
    add_config(sample, f);
    add(sample, f, "input", f.input, "corpus JSONL (.gz ok)");
    add(sample, f, "out", f.out, "records JSONL");
    add_corpus(sample, f);
    add_tokenizer(sample, f);

    auto* generate = app.add_subcommand("generate", "fill in model responses (resumable)");
    add_config(generate, f);
    add(generate, f, "records", f.records, "records JSONL");
    add(generate, f, "out", f.out, "output records (default: update --records in place)");
    add_backend(generate, f);
    add_tokenizer(generate, f);
    add(generate, f, "answer-len", f.answer_len, "answer length |s| (sets default max tokens)");

    auto* score = app.add_subcommand("score", "compute edit distances between responses and answers");
    add_config(score, f);
    add(score, f, "records", f.records, "records JSONL");
    add(score, f, "out", f.out, "output records (default: in place)");

    auto* emlaw_cmd = app.add_subcommand("emlaw", "level-set entropy vs. memorization score fit");
    add_config(emlaw_cmd, f);
    add(emlaw_cmd, f, "records", f.records, "scored records JSONL");
    add(emlaw_cmd, f, "out", f.out, "report JSON (default: stdout)");
    add_analysis(emlaw_cmd, f);

    auto* inst = app.add_subcommand("instancewise", "per-instance entropy vs. memorization score");
    add_config(inst, f);
    add(inst, f, "records", f.records, "scored records JSONL");
    add(inst, f, "out", f.out, "report JSON (default: stdout)");
    add_analysis(inst, f);

    auto* gib = app.add_subcommand("gibberish", "token- vs char-level statistics of labelled sets");
    add_config(gib, f);
    add(gib, f, "records", f.records, "scored records JSONL");
    add(gib, f, "labels", f.labels, "labels JSONL; omit to list heuristic candidates");
    add(gib, f, "out", f.out, "report JSON (default: stdout)");
    add_tokenizer(gib, f);

    auto* embedi = app.add_subcommand("embedi", "dataset inference on a suspect corpus");
    add_config(embedi, f);
    add(embedi, f, "suspect", f.suspect, "suspect corpus JSONL");
    add(embedi, f, "input", f.input, "alias for --suspect");
    add(embedi, f, "out", f.out, "also write the verdict here");
    add(embedi, f, "evidence", f.evidence, "evidence report path");
    add(embedi, f, "seed", f.seed, "window sampling seed");
    add(embedi, f, "prompt-len", f.prompt_len, "prompt length |p| in tokens");
    add(embedi, f, "answer-len", f.answer_len, "answer length |s| in tokens");
    add_backend(embedi, f);
    add_tokenizer(embedi, f);
    add_embedi(embedi, f);
    add(embedi, f, "min-level-count", f.min_level_count, "drop level sets with fewer instances");
    add(embedi, f, "min-samples", f.min_samples, "minimum eligible suspect documents");

    auto* plot = app.add_subcommand("plot", "render an SVG from an emlaw report or scatter CSV");
    add_config(plot, f);
    add(plot, f, "input", f.input, "report JSON or scatter CSV");
    add(plot, f, "out", f.out, "SVG path (default: stdout)");
    add(plot, f, "svg", f.svg, "alias for --out");

    auto* validate = app.add_subcommand("validate-config", "check a config file and print the effective settings");
    add_config(validate, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << "run '" << app.get_name() << (active == &app ? "" : " " + active->get_name()) << " --help' for usage\n";
        return 2;
    }

    g_interrupted.store(false);
    auto previous = std::signal(SIGINT, on_interrupt);
    struct Restore {
        void (*handler)(int);
        ~Restore() { std::signal(SIGINT, handler); }
    } restore{previous == SIG_ERR ? SIG_DFL : previous};

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        if (name == "validate-config") return cmd_validate(f, out, err);
        const auto cfg = resolve_config(f, sub, err);
        if (name == "sample") return cmd_sample(f, cfg, out, err);
        if (name == "generate") return cmd_generate(f, cfg, out, err);
        if (name == "score") return cmd_score(f, cfg, out, err);
        if (name == "emlaw") return cmd_emlaw(f, cfg, out, err);
        if (name == "instancewise") return cmd_instancewise(f, cfg, out, err);
        if (name == "gibberish") return cmd_gibberish(f, cfg, out, err);
        if (name == "embedi") return cmd_embedi(f, cfg, out, err);
        if (name == "plot") return cmd_plot(f, cfg, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidArgument ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: unknown subcommand " << name << "\n";
    return 2;
}

}  // namespace emlaw::cli
