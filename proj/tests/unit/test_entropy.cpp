#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "emlaw/entropy.hpp"
#include "helpers.hpp"

using namespace emlaw;

namespace {

SampleRecord scored(std::uint64_t id, TokenSequence answer, std::uint32_t e) {
    SampleRecord r;
    r.id = id;
    r.answer = std::move(answer);
    r.response = r.answer;
    r.distance = e;
    return r;
}

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("instance entropy examples") {
    auto c = instance_entropy(TokenSequence{5, 5, 5, 5});
    CHECK(c.bits == 0.0);
    CHECK(c.support_size == 1);
    CHECK(c.normalized == 1.0);

    auto u = instance_entropy(TokenSequence{1, 2, 3, 4});
    CHECK(u.bits == 2.0);
    CHECK(u.support_size == 4);

    auto m = instance_entropy(TokenSequence{1, 1, 2, 2, 3, 3, 3, 3});
    CHECK(m.bits == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(m.bits == doctest::Approx(oracle::entropy_bits({{1, 2}, {2, 2}, {3, 4}})).epsilon(1e-15));
    CHECK(m.support_size == 3);

    CHECK_ERROR_CODE(instance_entropy(TokenSequence{}), ErrorCode::EmptySequence);
}

TEST_CASE("level sets pool answer tokens") {
    std::vector<SampleRecord> recs{scored(0, {1, 1, 2, 2}, 3), scored(1, {2, 3, 3, 3}, 3)};
    auto sets = build_level_sets(recs);
    REQUIRE(sets.size() == 1);
    const auto& d = sets.at(3).tokens;
    CHECK(d.counts == std::map<std::uint32_t, std::uint64_t>{{1, 2}, {2, 3}, {3, 3}});
    CHECK(d.total == 8);
    CHECK(sets.at(3).instances == 2);

    auto est = level_set_entropy(d);
    CHECK(est.bits == doctest::Approx(oracle::entropy_bits(d.counts)).epsilon(1e-14));
    CHECK(est.bits == doctest::Approx(1.5613).epsilon(1e-4));
    CHECK(est.normalized == doctest::Approx(0.9852).epsilon(1e-4));
    CHECK(est.normalized == doctest::Approx(oracle::entropy_bits(d.counts) / std::log2(3.0)).epsilon(1e-14));

    std::vector<SampleRecord> one{scored(0, {9, 9}, 0)};
    CHECK(build_level_sets(one).at(0).tokens.counts == std::map<std::uint32_t, std::uint64_t>{{9, 2}});
    CHECK(build_level_sets(std::vector<SampleRecord>{}).empty());
}

TEST_CASE("level set errors") {
    std::vector<SampleRecord> mixed{scored(0, {1, 2}, 0), scored(1, {1, 2, 3}, 0)};
    CHECK_ERROR_CODE(build_level_sets(mixed), ErrorCode::InconsistentLength);
    std::vector<SampleRecord> unscored{scored(0, {1, 2}, 0)};
    unscored[0].distance.reset();
    CHECK_ERROR_CODE(build_level_sets(unscored), ErrorCode::MissingDistance);
}

TEST_CASE("degenerate and uniform distributions") {
    EmpiricalDistribution d;
    d.add(7, 100);
    auto est = shannon_entropy(d);
    CHECK(est.bits == 0.0);
    CHECK(est.normalized == 1.0);

    EmpiricalDistribution u;
    for (std::uint32_t i = 0; i < 64; ++i) u.add(i, 3);
    auto ue = shannon_entropy(u);
    CHECK(ue.bits == 6.0);
    CHECK(ue.normalized == 1.0);

    CHECK_ERROR_CODE(shannon_entropy(EmpiricalDistribution{}), ErrorCode::EmptyDistribution);
}

TEST_CASE("character entropy") {
    std::vector<std::string> ab{"ab", "ba"};
    auto e = char_entropy(ab);
    CHECK(e.bits == 1.0);
    CHECK(e.support_size == 2);
    CHECK(e.normalized == 1.0);
    CHECK(char_entropy(std::vector<std::string>{"aaaa"}).bits == 0.0);
    CHECK(char_histogram(std::vector<std::string>{"n\xC3\xA9"}).total == 2);
    CHECK_ERROR_CODE(char_entropy(std::vector<std::string>{"", ""}), ErrorCode::EmptyDistribution);
}

TEST_CASE("random distributions respect the bounds and match the oracle") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 500; ++i) {
        EmpiricalDistribution d;
        const auto support = 1 + rng() % 200;
        for (std::uint32_t k = 0; k < support; ++k) d.add(static_cast<std::uint32_t>(rng() % 100000), 1 + rng() % 50);
        auto est = shannon_entropy(d);
        CHECK(est.bits >= 0.0);
        CHECK(est.bits <= std::log2(static_cast<double>(est.support_size)));
        CHECK(est.normalized >= 0.0);
        CHECK(est.normalized <= 1.0);
        CHECK(est.bits == doctest::Approx(oracle::entropy_bits(d.counts)).epsilon(1e-12));
    }
}

TEST_CASE("entropy ignores unit labels and merge order") {
    std::mt19937_64 rng(32);
    auto a = testutil::random_seq(rng, 60, 9);
    a.push_back(1);
    auto b = testutil::random_seq(rng, 60, 9);
    b.push_back(2);
    auto ha = histogram(a);
    ha.merge(histogram(b));
    auto hb = histogram(b);
    hb.merge(histogram(a));
    CHECK(ha == hb);

    TokenSequence shifted = a;
    for (auto& t : shifted) t += 1000;
    CHECK(instance_entropy(a).bits == instance_entropy(shifted).bits);
}

}
