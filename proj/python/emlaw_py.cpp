#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "emlaw/backend.hpp"
#include "emlaw/config.hpp"
#include "emlaw/embedi.hpp"
#include "emlaw/entropy.hpp"
#include "emlaw/error.hpp"
#include "emlaw/pipeline.hpp"
#include "emlaw/regression.hpp"
#include "emlaw/report.hpp"
#include "emlaw/sampler.hpp"
#include "emlaw/seqmetrics.hpp"
#include "emlaw/tokenize.hpp"

namespace py = pybind11;
using namespace emlaw;

namespace {

FilterMode filter_mode(const std::string& name) {
    if (name == "subsequence") return FilterMode::Subsequence;
    if (name == "substring") return FilterMode::Substring;
    throw Error(ErrorCode::InvalidArgument, "unknown filter mode: " + name);
}

std::vector<ScatterPoint> points(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw Error(ErrorCode::InconsistentLength, "x and y differ in length");
    }
    std::vector<ScatterPoint> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], ys[i], 1.0});
    return out;
}

EntropyEstimate entropy_of_counts(const std::map<std::uint32_t, std::uint64_t>& counts) {
    EmpiricalDistribution dist;
    for (const auto& [unit, n] : counts) dist.add(unit, n);
    return shannon_entropy(dist);
}

py::object json_to_py(const ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

AnalysisOptions analysis(std::uint64_t min_level_count, bool exclude_zero, const std::string& mode) {
    AnalysisOptions a;
    a.min_level_count = min_level_count;
    a.exclude_zero = exclude_zero;
    a.filter_mode = filter_mode(mode);
    return a;
}

}  // namespace

PYBIND11_MODULE(_emlaw, m) {
    m.doc() = "Entropy-memorization analysis core";
    m.attr("__version__") = kToolVersion;

    static py::exception<Error> error_type(m, "EmlawError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<Tokenizer>(m, "Tokenizer")
        .def_static("byte", &Tokenizer::byte)
        .def_static("whitespace", &Tokenizer::whitespace)
        .def_static(
            "bpe",
            [](std::map<std::string, TokenId> vocab, std::vector<MergeRule> merges, bool byte_fallback) {
                return Tokenizer::bpe(std::move(vocab), std::move(merges),
                                      byte_fallback ? UnknownPolicy::ByteFallback : UnknownPolicy::Error);
            },
            py::arg("vocab"), py::arg("merges"), py::arg("byte_fallback") = false)
        .def_static(
            "load_bpe",
            [](const std::string& vocab, const std::string& merges, bool byte_fallback) {
                return Tokenizer::load_bpe(vocab, merges,
                                           byte_fallback ? UnknownPolicy::ByteFallback : UnknownPolicy::Error);
            },
            py::arg("vocab_path"), py::arg("merges_path"), py::arg("byte_fallback") = false)
        .def("encode", &Tokenizer::encode)
        .def("decode", [](const Tokenizer& t, const TokenSequence& ids) { return t.decode(ids); })
        .def_property_readonly("vocab_size", &Tokenizer::vocab_size)
        .def_property_readonly("kind", [](const Tokenizer& t) { return std::string(to_string(t.kind())); });

    m.def("levenshtein", [](const TokenSequence& a, const TokenSequence& b) { return levenshtein(a, b); });
    m.def("lcs_length", [](const TokenSequence& a, const TokenSequence& b) { return lcs_length(a, b); });
    m.def("longest_common_substring",
          [](const TokenSequence& a, const TokenSequence& b) { return longest_common_substring(a, b); });

    py::class_<FilterDecision>(m, "FilterDecision")
        .def_readonly("lcs_length", &FilterDecision::lcs_length)
        .def_readonly("answer_len", &FilterDecision::answer_len)
        .def_readonly("excluded", &FilterDecision::excluded)
        .def_property_readonly("threshold", &FilterDecision::threshold);
    m.def(
        "trivial_filter",
        [](const TokenSequence& prompt, const TokenSequence& answer, const std::string& mode) {
            return trivial_filter(prompt, answer, filter_mode(mode));
        },
        py::arg("prompt"), py::arg("answer"), py::arg("mode") = "subsequence");

    py::class_<EntropyEstimate>(m, "EntropyEstimate")
        .def_readonly("bits", &EntropyEstimate::bits)
        .def_readonly("support_size", &EntropyEstimate::support_size)
        .def_readonly("normalized", &EntropyEstimate::normalized)
        .def("__repr__", [](const EntropyEstimate& e) {
            return "EntropyEstimate(bits=" + std::to_string(e.bits) +
                   ", support_size=" + std::to_string(e.support_size) +
                   ", normalized=" + std::to_string(e.normalized) + ")";
        });
    m.def("instance_entropy", [](const TokenSequence& s) { return instance_entropy(s); });
    m.def("entropy_of_counts", &entropy_of_counts, py::arg("counts"));
    m.def("normalized_entropy", &normalized_entropy, py::arg("bits"), py::arg("support_size"));
    m.def("char_entropy", [](const std::vector<std::string>& texts) { return char_entropy(texts); });

    py::class_<RegressionReport>(m, "RegressionReport")
        .def_readonly("intercept", &RegressionReport::intercept)
        .def_readonly("slope", &RegressionReport::slope)
        .def_readonly("pearson_r", &RegressionReport::pearson_r)
        .def_readonly("n_points", &RegressionReport::n_points)
        .def("__repr__", [](const RegressionReport& r) {
            return "RegressionReport(intercept=" + std::to_string(r.intercept) +
                   ", slope=" + std::to_string(r.slope) + ", pearson_r=" + std::to_string(r.pearson_r) + ")";
        });
    m.def(
        "fit_ols", [](const std::vector<double>& xs, const std::vector<double>& ys) { return fit_ols(points(xs, ys)); },
        py::arg("xs"), py::arg("ys"));
    m.def(
        "pearson", [](const std::vector<double>& xs, const std::vector<double>& ys) { return pearson(points(xs, ys)); },
        py::arg("xs"), py::arg("ys"));
    m.def(
        "spearman", [](const std::vector<double>& xs, const std::vector<double>& ys) { return spearman(xs, ys); },
        py::arg("xs"), py::arg("ys"));

    py::class_<SampleRecord>(m, "SampleRecord")
        .def(py::init<>())
        .def(py::init([](std::uint64_t id, TokenSequence prompt, TokenSequence answer) {
                 SampleRecord r;
                 r.id = id;
                 r.prompt = std::move(prompt);
                 r.answer = std::move(answer);
                 return r;
             }),
             py::arg("id"), py::arg("prompt"), py::arg("answer"))
        .def_readwrite("id", &SampleRecord::id)
        .def_readwrite("prompt", &SampleRecord::prompt)
        .def_readwrite("answer", &SampleRecord::answer)
        .def_readwrite("response", &SampleRecord::response)
        .def_readwrite("lcs", &SampleRecord::lcs)
        .def_readwrite("distance", &SampleRecord::distance)
        .def_readwrite("filtered", &SampleRecord::filtered)
        .def_readwrite("source_doc", &SampleRecord::source_doc)
        .def_readwrite("window_hash", &SampleRecord::window_hash)
        .def("to_json", [](const SampleRecord& r) { return record_to_json(r); })
        .def_static("from_json", [](const std::string& line) { return record_from_json(line); })
        .def("__eq__", [](const SampleRecord& a, const SampleRecord& b) { return a == b; });

    py::class_<Document>(m, "Document")
        .def(py::init([](std::string id, TokenSequence tokens) { return Document{std::move(id), std::move(tokens)}; }),
             py::arg("id"), py::arg("tokens"))
        .def_readwrite("id", &Document::id)
        .def_readwrite("tokens", &Document::tokens);

    m.def(
        "sample_pairs",
        [](const std::vector<Document>& docs, std::uint64_t n_samples, std::int64_t seed, std::uint32_t prompt_len,
           std::uint32_t answer_len, const std::string& sampling) {
            RunConfig cfg;
            cfg.n_samples = n_samples;
            cfg.rng_seed = seed;
            cfg.prompt_len = prompt_len;
            cfg.answer_len = answer_len;
            cfg.sampling = parse_sampling_mode(sampling);
            return sample_pairs(docs, cfg);
        },
        py::arg("documents"), py::arg("n_samples"), py::arg("seed") = 0, py::arg("prompt_len") = 100,
        py::arg("answer_len") = 50, py::arg("sampling") = "document");
    m.def(
        "apply_filter",
        [](std::vector<SampleRecord> records, const std::string& mode) {
            auto parts = apply_filter(std::move(records), filter_mode(mode));
            return py::make_tuple(std::move(parts.retained), std::move(parts.excluded));
        },
        py::arg("records"), py::arg("mode") = "subsequence");
    m.def("read_records", [](const std::string& path) { return read_records(path); });
    m.def("write_records", [](const std::vector<SampleRecord>& records) { return write_records(records); });

    py::class_<GenerationConfig>(m, "GenerationConfig")
        .def(py::init([](std::uint32_t max_tokens, double temperature, double top_p,
                         std::optional<std::uint32_t> top_k, std::optional<std::int64_t> seed) {
                 GenerationConfig g;
                 g.max_tokens = max_tokens;
                 g.temperature = temperature;
                 g.top_p = top_p;
                 g.top_k = top_k;
                 g.seed = seed;
                 g.validate();
                 return g;
             }),
             py::arg("max_tokens") = 50, py::arg("temperature") = 0.8, py::arg("top_p") = 1.0,
             py::arg("top_k") = py::none(), py::arg("seed") = py::none())
        .def_readwrite("max_tokens", &GenerationConfig::max_tokens)
        .def_readwrite("temperature", &GenerationConfig::temperature)
        .def_readwrite("top_p", &GenerationConfig::top_p)
        .def_readwrite("top_k", &GenerationConfig::top_k)
        .def_readwrite("seed", &GenerationConfig::seed);

    py::class_<Backend>(m, "Backend")
        .def_property_readonly("kind", [](const Backend& b) { return std::string(to_string(b.kind())); })
        .def(
            "generate",
            [](const Backend& b, const TokenSequence& prompt, const TokenSequence& answer,
               const GenerationConfig& cfg) { return b.generate(prompt, answer, cfg).response_tokens; },
            py::arg("prompt"), py::arg("answer"), py::arg("cfg") = GenerationConfig{});
    py::class_<MockPerfect, Backend>(m, "MockPerfect").def(py::init<>());
    py::class_<MockUniform, Backend>(m, "MockUniform").def(py::init<std::uint32_t>(), py::arg("vocab_size"));
    py::class_<MockEntropyNoise, Backend>(m, "MockEntropyNoise")
        .def(py::init<std::uint32_t>(), py::arg("vocab_size"));
    py::class_<MockKgram, Backend>(m, "MockKgram")
        .def(py::init([](const std::vector<TokenSequence>& training, std::uint32_t k, std::uint32_t vocab_size) {
                 return MockKgram(training, k, vocab_size);
             }),
             py::arg("training"), py::arg("k"), py::arg("vocab_size"));
    m.def(
        "mock_entropy_noise_corrupt",
        [](const TokenSequence& answer, std::uint32_t vocab_size, std::uint64_t seed) {
            return mock_entropy_noise_corrupt(answer, vocab_size, seed);
        },
        py::arg("answer"), py::arg("vocab_size"), py::arg("seed"));

    py::class_<LevelSetReport>(m, "LevelSetReport")
        .def_readonly("e", &LevelSetReport::e)
        .def_readonly("count", &LevelSetReport::count)
        .def_readonly("unique_tokens", &LevelSetReport::unique_tokens)
        .def_readonly("entropy_bits", &LevelSetReport::entropy_bits)
        .def_readonly("normalized", &LevelSetReport::normalized);
    py::class_<EmLawReport>(m, "EmLawReport")
        .def_readonly("levels", &EmLawReport::levels)
        .def_readonly("regression", &EmLawReport::regression)
        .def_readonly("regression_excluding_zero", &EmLawReport::regression_excluding_zero)
        .def_readonly("warnings", &EmLawReport::warnings)
        .def("to_dict", [](const EmLawReport& r) { return json_to_py(emlaw_report_to_json(r, ordered_json::object())); })
        .def("levels_csv", [](const EmLawReport& r) { return levels_csv(r.levels); });

    m.def(
        "run_emlaw",
        [](std::vector<SampleRecord> records, const Backend& backend, Tokenizer& tokenizer,
           const GenerationConfig& cfg, std::uint64_t min_level_count, bool exclude_zero,
           const std::string& filter, std::size_t concurrency) {
            EmLawReport report;
            {
                py::gil_scoped_release release;
                report = run_emlaw(records, backend, tokenizer, cfg,
                                   analysis(min_level_count, exclude_zero, filter), concurrency);
            }
            return py::make_tuple(std::move(report), std::move(records));
        },
        py::arg("records"), py::arg("backend"), py::arg("tokenizer"), py::arg("cfg") = GenerationConfig{},
        py::arg("min_level_count") = 1, py::arg("exclude_zero") = false, py::arg("filter") = "subsequence",
        py::arg("concurrency") = 8,
        "Generates, scores and fits. Returns (report, records with responses and distances).");
    m.def(
        "analyze_emlaw",
        [](const std::vector<SampleRecord>& records, std::uint64_t min_level_count, bool exclude_zero,
           const std::string& filter) {
            return analyze_emlaw(records, analysis(min_level_count, exclude_zero, filter));
        },
        py::arg("records"), py::arg("min_level_count") = 1, py::arg("exclude_zero") = false,
        py::arg("filter") = "subsequence");

    m.def(
        "decide",
        [](double intercept, double slope, const std::string& statistic, double threshold) {
            EmbediConfig cfg;
            cfg.statistic = parse_statistic(statistic);
            (cfg.statistic == Statistic::Intercept ? cfg.tau_k : cfg.tau_m) = threshold;
            RegressionReport r;
            r.intercept = intercept;
            r.slope = slope;
            return decide(r, cfg);
        },
        py::arg("intercept"), py::arg("slope") = 0.0, py::arg("statistic") = "intercept",
        py::arg("threshold") = 0.0);
    m.def("preset_tau_k", [](const std::string& family) { return preset_tau_k(family); });
}
