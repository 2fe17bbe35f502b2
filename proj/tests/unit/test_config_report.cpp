#include <doctest.h>

#include "emlaw/config.hpp"
#include "emlaw/report.hpp"
#include "emlaw/util.hpp"
#include "helpers.hpp"

using namespace emlaw;
using nlohmann::json;

namespace {

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& path) {
    for (const auto& i : issues) {
        if (i.path == path) return true;
    }
    return false;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty config gives the defaults") {
    auto r = validate_config(json::object());
    REQUIRE(r.ok());
    CHECK(r.warnings.empty());
    const auto& c = r.config;
    CHECK(c.run.prompt_len == 100);
    CHECK(c.run.answer_len == 50);
    CHECK(c.effective_generation().max_tokens == 50);
    CHECK(c.generation.temperature == 0.8);
    CHECK(c.embedi.min_samples == 1500);
    CHECK(c.embedi.tau_k == 0.0);
    CHECK(c.run.sampling == SamplingMode::DocumentUniform);
    CHECK(c.analysis.filter_mode == FilterMode::Subsequence);
}

TEST_CASE("max tokens follows the answer length unless set") {
    auto r = validate_config(json::parse(R"({"answer_len": 32})"));
    CHECK(r.config.effective_generation().max_tokens == 32);
    auto s = validate_config(json::parse(R"({"answer_len": 32, "generation": {"max_tokens": 10}})"));
    CHECK(s.config.effective_generation().max_tokens == 10);
}

TEST_CASE("errors name the field") {
    auto r = validate_config(json::parse(R"({"n_samples": -5})"));
    CHECK_FALSE(r.ok());
    CHECK(has_issue(r.errors, "n_samples"));

    auto t = validate_config(json::parse(
        R"({"generation": {"top_p": 2}, "backend": {"kind": "telepathy"}, "embedi": {"preset": "gpt"}, "tokenizer": []})"));
    CHECK(has_issue(t.errors, "generation"));
    CHECK(has_issue(t.errors, "backend.kind"));
    CHECK(has_issue(t.errors, "embedi.preset"));
    CHECK(has_issue(t.errors, "tokenizer"));

    CHECK(has_issue(validate_config(json::parse(R"({"tokenizer": {"kind": "bpe"}})")).errors, "tokenizer"));
    CHECK(has_issue(validate_config(json::parse(R"({"backend": {"kind": "http"}})")).errors, "backend"));
    CHECK_FALSE(validate_config(json::array()).ok());
}

TEST_CASE("unknown fields warn") {
    auto r = validate_config(json::parse(R"({"colour": "blue", "backend": {"flux": 1}})"));
    CHECK(r.ok());
    CHECK(has_issue(r.warnings, "colour"));
    CHECK(has_issue(r.warnings, "backend.flux"));
}

TEST_CASE("full config round trip") {
    auto r = validate_config(json::parse(R"({
        "prompt_len": 20, "answer_len": 10, "n_samples": 50, "seed": 4, "sampling": "token",
        "filter_mode": "substring",
        "tokenizer": {"kind": "whitespace"},
        "generation": {"temperature": 0, "top_k": 5, "seed": 2},
        "backend": {"kind": "mock_kgram", "mock_params": {"k": 2}, "retries": 5, "concurrency": 3, "api_key": "hidden"},
        "analysis": {"min_level_count": 3, "exclude_zero": true},
        "embedi": {"preset": "olmo2", "statistic": "slope", "tau_m": 0.2, "min_samples": 10}
    })"));
    REQUIRE(r.ok());
    const auto& c = r.config;
    CHECK(c.run.sampling == SamplingMode::TokenUniform);
    CHECK(c.analysis.filter_mode == FilterMode::Substring);
    CHECK(c.generation.greedy());
    CHECK(c.backend.param("k", 4) == 2);
    CHECK(c.backend.retry.attempts == 5);
    CHECK(c.embedi.tau_k == 3.0);
    CHECK(c.embedi.statistic == Statistic::Slope);
    auto dumped = config_to_json(c);
    CHECK(dumped["backend"]["api_key"] == "<redacted>");
    CHECK(dumped["generation"]["decoding"] == "greedy");
    CHECK(config_digest(c) == config_digest(c));
    CHECK(config_digest(c) != config_digest(validate_config(json::object()).config));
}

TEST_CASE("config file errors") {
    testutil::TempDir dir("cfg");
    write_file_atomic(dir / "bad.json", "{ nope");
    CHECK_FALSE(validate_config_file(dir / "bad.json").ok());
    CHECK_FALSE(validate_config_file(dir / "missing.json").ok());
}

}

TEST_SUITE("report") {

TEST_CASE("scatter CSV round trip") {
    std::vector<LevelSetReport> levels{{0, 10, 4, 1.75, 0.875}, {3, 2, 9, 3.1699250014423126, 1.0}};
    auto csv = levels_csv(levels);
    CHECK(csv.rfind("e,count,unique_tokens,entropy_bits,normalized\n0,10,4,1.75,0.875\n", 0) == 0);
    auto back = parse_levels_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].entropy_bits == levels[1].entropy_bits);
    CHECK(back[1].unique_tokens == 9);
    CHECK_ERROR_CODE(parse_levels_csv("x,y\n"), ErrorCode::Parse);
    CHECK_ERROR_CODE(parse_levels_csv("e,count,unique_tokens,entropy_bits,normalized\n1,2\n"), ErrorCode::Parse);
}

TEST_CASE("report JSON shape") {
    EmLawReport r;
    r.levels = {{0, 10, 4, 1.75, 0.875}, {3, 2, 9, 3.0, 1.0}};
    r.regression = {1.75, 0.4166, 1.0, 2};
    r.normalization_note = kNormalizationNote;
    auto j = emlaw_report_to_json(r, ordered_json::object());
    CHECK(j.contains("levels"));
    CHECK(j["regression"]["slope"] == 0.4166);
    CHECK_FALSE(j.contains("regression_excluding_zero"));
    r.regression_excluding_zero = RegressionReport{};
    CHECK(emlaw_report_to_json(r, ordered_json::object()).contains("regression_excluding_zero"));

    EmbediVerdict v;
    v.label = 1;
    v.value = 3.992;
    auto vj = verdict_to_json(v, "ev.json");
    CHECK(vj.dump() == R"({"label":1,"statistic":"intercept","value":3.992,"threshold":0.0,"evidence_path":"ev.json"})");
}

TEST_CASE("svg rendering") {
    std::vector<ScatterPoint> pts{{0, 1}, {1, 2}, {2, 3.5}};
    auto svg = render_svg(pts, fit_ols(pts), {}, "a<b");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(svg.find("<line") != std::string::npos);
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(render_svg(pts, fit_ols(pts)) == render_svg(pts, fit_ols(pts)));
    auto empty = render_svg({}, std::nullopt);
    CHECK(empty.find("</svg>") != std::string::npos);
}

TEST_CASE("atomic writes and hashing") {
    testutil::TempDir dir("util");
    write_file_atomic(dir / "a.txt", "hello");
    CHECK(read_file(dir / "a.txt") == "hello");
    CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    CHECK(hash_file(dir / "a.txt") == hash_hex("hello"));
    CHECK(hash_hex("hello").size() == 16);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
}

}
