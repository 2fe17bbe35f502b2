#include <doctest.h>

#include <atomic>
#include <set>

#include <nlohmann/json.hpp>

#include "../stub_server.hpp"
#include "emlaw/backend.hpp"
#include "emlaw/entropy.hpp"
#include "emlaw/tokenize.hpp"
#include "helpers.hpp"

using namespace emlaw;
using namespace std::chrono_literals;

namespace {

GenerationConfig seeded(std::int64_t seed, std::uint32_t max_tokens = 50) {
    GenerationConfig cfg;
    cfg.seed = seed;
    cfg.max_tokens = max_tokens;
    return cfg;
}

BackendSpec http_spec(const std::string& url) {
    BackendSpec spec;
    spec.kind = BackendKind::Http;
    spec.endpoint_url = url;
    spec.model_name = "stub-model";
    spec.retry.initial_backoff = 1ms;
    spec.retry.max_backoff = 4ms;
    spec.timeout = 2000ms;
    return spec;
}

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("perfect memorizer echoes the answer") {
    MockPerfect m;
    TokenSequence prompt{1, 2};
    TokenSequence answer{3, 1, 4};
    CHECK(m.generate(prompt, answer, seeded(0)).response_tokens == answer);
    CHECK(m.generate(prompt, answer, seeded(0, 2)).response_tokens == TokenSequence{3, 1});
}

TEST_CASE("uniform mock is seeded and in range") {
    MockUniform m(100);
    TokenSequence prompt{5, 6, 7};
    TokenSequence answer{1};
    auto a = m.generate(prompt, answer, seeded(7, 5)).response_tokens;
    auto b = m.generate(prompt, answer, seeded(7, 5)).response_tokens;
    CHECK(a.size() == 5);
    CHECK(a == b);
    for (auto t : a) CHECK(t < 100);
    CHECK(m.generate(prompt, answer, seeded(8, 5)).response_tokens != a);
    CHECK_ERROR_CODE(MockUniform(0), ErrorCode::InvalidArgument);
}

TEST_CASE("entropy-noise corruption limits") {
    TokenSequence constant(50, 4);
    CHECK(mock_entropy_noise_corrupt(constant, 1000, 1) == constant);

    // An answer covering the whole vocabulary uniformly has rate 1: every
    // position is substituted with a different id.
    TokenSequence full(256);
    for (TokenId i = 0; i < 256; ++i) full[i] = i;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto out = mock_entropy_noise_corrupt(full, 256, seed);
        REQUIRE(out.size() == full.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] != full[i]);
            CHECK(out[i] < 256);
        }
    }
}

TEST_CASE("entropy-noise corruption rate tracks answer entropy") {
    // Average Hamming fraction over many seeds approaches H / log2 V.
    const std::uint32_t vocab = 1024;
    TokenSequence answer;
    for (int i = 0; i < 64; ++i) answer.push_back(static_cast<TokenId>(i % 32));  // H = 5 bits
    double changed = 0;
    const int trials = 400;
    for (int s = 0; s < trials; ++s) {
        auto out = mock_entropy_noise_corrupt(answer, vocab, static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < out.size(); ++i) changed += out[i] != answer[i];
    }
    const double rate = changed / (trials * answer.size());
    CHECK(rate == doctest::Approx(5.0 / 10.0).epsilon(0.03));
}

TEST_CASE("entropy-noise mock is a pure function of its inputs") {
    MockEntropyNoise m(1000);
    TokenSequence p{1, 2, 3};
    TokenSequence s{9, 8, 7, 6, 5};
    CHECK(m.generate(p, s, seeded(3)).response_tokens == m.generate(p, s, seeded(3)).response_tokens);
    CHECK(derive_seed(3, p, s) != derive_seed(4, p, s));
    CHECK(derive_seed(3, p, s) != derive_seed(3, s, p));
}

TEST_CASE("k-gram mock follows its training data") {
    std::vector<TokenSequence> training{{1, 2, 3, 4, 5, 6, 7, 8}};
    MockKgram m(training, 3, 50);
    GenerationConfig greedy = seeded(0, 4);
    greedy.temperature = 0.0;
    CHECK(m.generate(TokenSequence{1, 2, 3}, TokenSequence{}, greedy).response_tokens == TokenSequence{4, 5, 6, 7});
    // Unseen context backs off to shorter ones.
    CHECK(m.generate(TokenSequence{40, 41, 5}, TokenSequence{}, greedy).response_tokens.front() == 6);

    std::vector<TokenSequence> branchy{{1, 2}, {1, 2}, {1, 2}, {1, 3}};
    MockKgram b(branchy, 1, 10);
    GenerationConfig top1 = seeded(0, 1);
    top1.top_k = 1;
    for (std::int64_t s = 0; s < 20; ++s) {
        top1.seed = s;
        CHECK(b.generate(TokenSequence{1}, TokenSequence{}, top1).response_tokens == TokenSequence{2});
    }
    GenerationConfig nucleus = seeded(0, 1);
    nucleus.top_p = 0.5;
    CHECK(b.generate(TokenSequence{1}, TokenSequence{}, nucleus).response_tokens == TokenSequence{2});
    std::set<TokenId> seen;
    GenerationConfig open = seeded(0, 1);
    open.temperature = 1.0;
    for (std::int64_t s = 0; s < 200; ++s) {
        open.seed = s;
        seen.insert(b.generate(TokenSequence{1}, TokenSequence{}, open).response_tokens.front());
    }
    CHECK(seen == std::set<TokenId>{2, 3});
}

TEST_CASE("generation config validation") {
    GenerationConfig c;
    c.validate();
    c.top_p = 0.0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidArgument);
    c.top_p = 1.0;
    c.temperature = -1;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidArgument);
    c.temperature = 0;
    c.max_tokens = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("request body is field-for-field") {
    GenerationConfig cfg;
    cfg.max_tokens = 50;
    cfg.temperature = 0.8;
    CHECK(completion_request_body("m", "hi", cfg) ==
          R"({"model":"m","prompt":"hi","max_tokens":50,"temperature":0.8,"top_p":1.0})");
    cfg.seed = 9;
    cfg.top_k = 40;
    CHECK(completion_request_body("m", "hi", cfg) ==
          R"({"model":"m","prompt":"hi","max_tokens":50,"temperature":0.8,"top_p":1.0,"seed":9,"top_k":40})");
}

TEST_CASE("response parsing") {
    CHECK(parse_completion_response(R"({"choices":[{"text":" world"}]})") == " world");
    CHECK_ERROR_CODE(parse_completion_response("{"), ErrorCode::ProtocolError);
    CHECK_ERROR_CODE(parse_completion_response(R"({"choices":[]})"), ErrorCode::ProtocolError);
    CHECK_ERROR_CODE(parse_completion_response(R"({"choices":[{"text":3}]})"), ErrorCode::ProtocolError);
    CHECK_ERROR_CODE(parse_completion_response("[]"), ErrorCode::ProtocolError);
}

TEST_CASE("http backend against a stub server") {
    stub::CompletionServer server;
    auto tok = Tokenizer::byte();
    auto spec = http_spec(server.url() + "/api/");
    spec.api_key = "sekrit";
    HttpBackend http(spec, tok);

    server.script({{200, stub::CompletionServer::completion("xyz")}});
    auto r = generate(tok.encode("abc"), TokenSequence{1}, seeded(5, 2), http, tok);
    CHECK(r.response_text == "xyz");
    CHECK(r.response_tokens == TokenSequence{'x', 'y'});
    auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].path == "/api/v1/completions");
    CHECK(reqs[0].authorization == "Bearer sekrit");
    CHECK(reqs[0].content_type == "application/json");
    CHECK(nlohmann::json::parse(reqs[0].body) ==
          nlohmann::json::parse(R"({"model":"stub-model","prompt":"abc","max_tokens":2,"temperature":0.8,"top_p":1.0,"seed":5})"));

    SUBCASE("transient 503 then success") {
        server.script({{503, "busy"}, {200, stub::CompletionServer::completion("ok")}});
        CHECK(http.complete("p", seeded(1)) == "ok");
        CHECK(server.requests().size() == 3);
    }
    SUBCASE("retry budget exhausted") {
        server.script({{503, "a"}, {503, "b"}, {503, "c"}, {200, stub::CompletionServer::completion("late")}});
        try {
            http.complete("p", seeded(1));
            FAIL("expected BackendRejected");
        } catch (const BackendRejected& e) {
            CHECK(e.status() == 503);
            CHECK(e.code() == ErrorCode::BackendRejected);
        }
        CHECK(server.requests().size() == 4);
    }
    SUBCASE("client errors are not retried") {
        server.script({{400, "bad request"}});
        CHECK_ERROR_CODE(http.complete("p", seeded(1)), ErrorCode::BackendRejected);
        CHECK(server.requests().size() == 2);
    }
    SUBCASE("malformed body") {
        server.script({{200, "not json"}});
        CHECK_ERROR_CODE(http.complete("p", seeded(1)), ErrorCode::ProtocolError);
    }
}

TEST_CASE("unreachable endpoint is BackendUnavailable") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto tok = Tokenizer::byte();
    HttpBackend http(http_spec("http://127.0.0.1:" + std::to_string(port)), tok);
    CHECK_ERROR_CODE(http.complete("p", seeded(1)), ErrorCode::BackendUnavailable);
}

TEST_CASE("backend spec validation") {
    BackendSpec s;
    s.kind = BackendKind::Http;
    CHECK_ERROR_CODE(s.validate(), ErrorCode::InvalidArgument);
    s.endpoint_url = "ftp://x";
    auto tok = Tokenizer::byte();
    CHECK_ERROR_CODE(HttpBackend(s, tok), ErrorCode::InvalidArgument);
    CHECK(parse_backend_kind("mock_kgram") == BackendKind::MockKgram);
    CHECK_ERROR_CODE(parse_backend_kind("gpt"), ErrorCode::InvalidArgument);
}

TEST_CASE("batch generation keeps job order and reports failures") {
    MockUniform m(10);
    std::vector<TokenSequence> prompts;
    for (TokenId i = 0; i < 64; ++i) prompts.push_back({i, i + 1});
    prompts[5].clear();
    TokenSequence answer{1, 2};
    std::vector<GenerationJob> jobs;
    for (std::size_t i = 0; i < prompts.size(); ++i) jobs.push_back({i, prompts[i], answer});

    std::atomic<int> callbacks{0};
    auto par = generate_batch(m, jobs, seeded(1, 3), 8, [&](std::size_t, const GenerationOutcome&) { ++callbacks; });
    auto seq = generate_batch(m, jobs, seeded(1, 3), 1);
    CHECK(callbacks == 64);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        CHECK(par[i].index() == seq[i].index());
        if (auto* g = std::get_if<GenerationResult>(&par[i])) {
            CHECK(g->response_tokens == std::get<GenerationResult>(seq[i]).response_tokens);
        }
    }
    CHECK(std::holds_alternative<GenerationFailure>(par[5]));

    std::atomic<bool> cancel{true};
    auto none = generate_batch(m, jobs, seeded(1, 3), 4, {}, &cancel);
    for (const auto& o : none) CHECK(std::holds_alternative<GenerationFailure>(o));
}

}
