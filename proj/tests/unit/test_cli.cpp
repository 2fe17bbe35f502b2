#include <doctest.h>

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../../tools/cli.hpp"
#include "emlaw/sampler.hpp"
#include "emlaw/util.hpp"
#include "helpers.hpp"

using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "emlaw");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = emlaw::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string write_corpus(const testutil::TempDir& dir, std::size_t docs, std::size_t len) {
    std::mt19937_64 rng(17);
    std::string body;
    for (std::size_t d = 0; d < docs; ++d) {
        json tokens = json::array();
        const auto k = 1 + rng() % 400;
        for (std::size_t i = 0; i < len; ++i) tokens.push_back(rng() % k);
        body += json{{"id", "doc" + std::to_string(d)}, {"tokens", tokens}}.dump() + "\n";
    }
    const auto path = (dir / "corpus.jsonl").string();
    emlaw::write_file_atomic(path, body);
    return path;
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sample writes one line per pair") {
    testutil::TempDir dir("cli-sample");
    auto corpus = write_corpus(dir, 50, 300);
    auto out = (dir / "records.jsonl").string();
    auto r = cli({"sample", "--input", corpus, "--n", "1000", "--seed", "7", "--out", out});
    CHECK_MESSAGE(r.code == 0, r.err);
    CHECK(count_lines(emlaw::read_file(out)) == 1000);
    auto meta = json::parse(emlaw::read_file(out + ".meta.json"));
    CHECK(meta["metadata"]["tool"] == "emlaw");
    CHECK(meta["metadata"]["inputs"].contains(corpus));
}

TEST_CASE("full pipeline, resumable generate, and emlaw outputs") {
    testutil::TempDir dir("cli-pipe");
    auto corpus = write_corpus(dir, 200, 200);
    auto recs = (dir / "r.jsonl").string();
    REQUIRE(cli({"sample", "--input", corpus, "--n", "1500", "--seed", "2", "--out", recs}).code == 0);

    auto gen = cli({"generate", "--records", recs, "--backend", "mock_entropy_noise", "--gen-seed", "3"});
    CHECK_MESSAGE(gen.code == 0, gen.err);
    CHECK_FALSE(std::filesystem::exists(recs + ".partial"));
    const auto first = emlaw::read_file(recs);
    // A second pass finds every response present and changes nothing.
    auto again = cli({"generate", "--records", recs, "--backend", "mock_entropy_noise", "--gen-seed", "3"});
    CHECK_MESSAGE(again.err.find("generated 0 of 0 requested") != std::string::npos, again.err);
    CHECK(emlaw::read_file(recs) == first);

    REQUIRE(cli({"score", "--records", recs}).code == 0);
    auto report = (dir / "report.json").string();
    auto svg = (dir / "plot.svg").string();
    auto em = cli({"emlaw", "--records", recs, "--out", report, "--svg", svg, "--exclude-zero"});
    CHECK_MESSAGE(em.code == 0, em.err);
    auto j = json::parse(emlaw::read_file(report));
    CHECK(j.contains("regression"));
    CHECK(j.contains("regression_excluding_zero"));
    CHECK(j["metadata"]["inputs"].contains(recs));
    CHECK(std::filesystem::exists(dir / "report.csv"));
    CHECK(emlaw::read_file(svg).find("<svg") == 0);

    auto plotted = cli({"plot", "--input", (dir / "report.csv").string()});
    CHECK(plotted.code == 0);
    CHECK(plotted.out.find("<circle") != std::string::npos);

    auto inst = cli({"instancewise", "--records", recs});
    CHECK(inst.code == 0);
    CHECK(json::parse(inst.out)["n_points"].get<int>() > 0);

    auto gib = cli({"gibberish", "--records", recs});
    CHECK(gib.code == 1);  // ids above 255 cannot be decoded as bytes
}

TEST_CASE("generation resumes from the journal") {
    testutil::TempDir dir("cli-resume");
    auto corpus = write_corpus(dir, 20, 200);
    auto recs = (dir / "r.jsonl").string();
    REQUIRE(cli({"sample", "--input", corpus, "--n", "30", "--out", recs}).code == 0);
    auto records = emlaw::read_records(recs);
    // Pretend an earlier run finished record 0 with a sentinel response.
    records[0].response = emlaw::TokenSequence{424242};
    emlaw::write_file_atomic(recs + ".partial", emlaw::record_to_json(records[0]) + "\n");
    auto r = cli({"generate", "--records", recs, "--backend", "mock_perfect"});
    CHECK(r.code == 0);
    CHECK(r.err.find("1 already present") != std::string::npos);
    CHECK(emlaw::read_records(recs)[0].response == emlaw::TokenSequence{424242});
}

TEST_CASE("embedi prints a verdict") {
    testutil::TempDir dir("cli-embedi");
    auto corpus = write_corpus(dir, 120, 200);
    auto evidence = (dir / "ev.json").string();
    auto r = cli({"embedi", "--suspect", corpus, "--backend", "mock_entropy_noise", "--min-samples", "120",
                  "--preset", "olmo2", "--evidence", evidence});
    CHECK_MESSAGE(r.code == 0, r.err);
    auto v = json::parse(r.out);
    CHECK(v["threshold"] == 3.0);
    CHECK(v["statistic"] == "intercept");
    CHECK(v["evidence_path"] == evidence);
    CHECK(v["label"] == (v["value"].get<double>() > 3.0 ? 1 : 0));
    CHECK(json::parse(emlaw::read_file(evidence)).contains("levels"));

    auto short_run = cli({"embedi", "--suspect", corpus, "--backend", "mock_uniform"});
    CHECK(short_run.code == 1);
    CHECK(short_run.err.find("InsufficientSuspectData") != std::string::npos);
}

TEST_CASE("perfect memorizer reports the degenerate fit") {
    testutil::TempDir dir("cli-perfect");
    auto corpus = write_corpus(dir, 30, 200);
    auto recs = (dir / "r.jsonl").string();
    REQUIRE(cli({"sample", "--input", corpus, "--n", "100", "--out", recs}).code == 0);
    REQUIRE(cli({"generate", "--records", recs, "--backend", "mock_perfect"}).code == 0);
    REQUIRE(cli({"score", "--records", recs}).code == 0);
    auto r = cli({"emlaw", "--records", recs});
    CHECK(r.code == 1);
    CHECK(r.err.find("InsufficientLevelSets") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"sample", "--n", "ten"}).code == 2);
    CHECK(cli({"sample", "--out", "x.jsonl"}).code == 2);
    CHECK(cli({"generate", "--records", "r.jsonl", "--backend", "gpt9"}).code == 2);
    CHECK(cli({"generate", "--records", "r.jsonl", "--top-p", "3"}).code == 2);
    CHECK(cli({"--help"}).code == 0);

    testutil::TempDir dir("cli-cfg");
    emlaw::write_file_atomic(dir / "bad.json", R"({"n_samples": -1, "mystery": 1})");
    auto v = cli({"validate-config", "--config", (dir / "bad.json").string()});
    CHECK(v.code == 2);
    CHECK(v.err.find("n_samples") != std::string::npos);
    CHECK(v.err.find("mystery") != std::string::npos);
    emlaw::write_file_atomic(dir / "good.json", R"({"n_samples": 5})");
    auto g = cli({"validate-config", "--config", (dir / "good.json").string()});
    CHECK(g.code == 0);
    CHECK(json::parse(g.out)["n_samples"] == 5);
}

TEST_CASE("missing inputs are domain errors") {
    CHECK(cli({"score", "--records", "/nonexistent/r.jsonl"}).code == 1);
}

}
