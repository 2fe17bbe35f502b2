#include <doctest.h>

#include <random>

#include "emlaw/tokenize.hpp"
#include "emlaw/util.hpp"
#include "helpers.hpp"

using namespace emlaw;

namespace {

Tokenizer abab_bpe() {
    return Tokenizer::bpe({{"a", 0}, {"b", 1}, {"ab", 2}, {"abab", 3}}, {{"a", "b"}, {"ab", "ab"}});
}

// Byte-level vocabulary over all 256 stand-ins plus whatever merges produce.
Tokenizer byte_level_bpe(const std::vector<MergeRule>& merges) {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Bpe;
    spec.byte_level = true;
    spec.pretokenize = PreTokenize::SpacePrefix;
    // GPT-2 stand-ins: printable bytes as themselves, the rest from U+0100 up.
    std::vector<std::string> alphabet;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
        bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174);
        std::string s;
        append_utf8(s, printable ? static_cast<char32_t>(b) : next++);
        alphabet.push_back(s);
    }
    TokenId id = 0;
    for (const auto& s : alphabet) spec.vocab.emplace(s, id++);
    for (const auto& [l, r] : merges) spec.vocab.emplace(l + r, id++);
    spec.merges = merges;
    return Tokenizer(std::move(spec));
}

}  // namespace

TEST_SUITE("tokenize") {

TEST_CASE("whitespace ids follow first appearance") {
    auto tok = Tokenizer::whitespace();
    CHECK(tok.encode("a b a") == TokenSequence{0, 1, 0});
    CHECK(tok.encode("c  a\tb\n") == TokenSequence{2, 0, 1});
    CHECK(tok.decode(TokenSequence{0, 1, 0}) == "a b a");
    CHECK(tok.vocab_size() == 3);
    CHECK_ERROR_CODE(tok.decode(TokenSequence{7}), ErrorCode::UnknownToken);
}

TEST_CASE("whitespace session vocabulary reloads") {
    testutil::TempDir dir("ws");
    auto tok = Tokenizer::whitespace();
    tok.encode("x y z");
    write_file_atomic(dir / "vocab.json", tok.vocab_json());
    auto again = Tokenizer::load_whitespace(dir / "vocab.json");
    CHECK(again.encode("z y w") == TokenSequence{2, 1, 3});
}

TEST_CASE("byte ids are byte values") {
    auto tok = Tokenizer::byte();
    CHECK(tok.encode("AB") == TokenSequence{65, 66});
    CHECK(tok.decode(TokenSequence{65, 66}) == "AB");
    CHECK(tok.encode("\xC3\xA9").size() == 2);
    CHECK_ERROR_CODE(tok.decode(TokenSequence{256}), ErrorCode::UnknownToken);
}

TEST_CASE("bpe applies merges in rank order") {
    auto tok = abab_bpe();
    CHECK(tok.encode("abab") == TokenSequence{3});
    CHECK(tok.encode("aba") == TokenSequence{2, 0});
    CHECK(tok.encode("ab ab") == TokenSequence{2, 2});
    CHECK(tok.decode(TokenSequence{3}) == "abab");
}

TEST_CASE("bpe merges every occurrence of the best pair before moving on") {
    // Rank 0 (b,c) must fire before (a,b) even though (a,b) appears first.
    auto tok = Tokenizer::bpe({{"a", 0}, {"b", 1}, {"c", 2}, {"bc", 3}, {"ab", 4}},
                              {{"b", "c"}, {"a", "b"}});
    CHECK(tok.encode("abc") == TokenSequence{0, 3});
    CHECK(tok.encode("abab") == TokenSequence{4, 4});
}

TEST_CASE("bpe unknown symbols") {
    auto tok = abab_bpe();
    CHECK_ERROR_CODE(tok.encode("abx"), ErrorCode::UnknownToken);
    try {
        tok.encode("abx");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("'x'") != std::string::npos);
    }

    auto fb = Tokenizer::bpe({{"a", 0}, {"<0x78>", 1}, {"<0xC3>", 2}, {"<0xA9>", 3}}, {},
                             UnknownPolicy::ByteFallback);
    CHECK(fb.encode("ax") == TokenSequence{0, 1});
    CHECK(fb.encode("\xC3\xA9") == TokenSequence{2, 3});
    CHECK(fb.decode(TokenSequence{0, 1, 2, 3}) == "ax\xC3\xA9");
    CHECK_ERROR_CODE(fb.encode("q"), ErrorCode::UnknownToken);
}

TEST_CASE("bpe vocabulary and merge validation") {
    CHECK_ERROR_CODE(Tokenizer::bpe({{"a", 0}, {"b", 2}}, {}), ErrorCode::InvalidTokenizer);
    CHECK_ERROR_CODE(Tokenizer::bpe({{"a", 0}, {"b", 0}}, {}), ErrorCode::InvalidTokenizer);
    CHECK_ERROR_CODE(Tokenizer::bpe({{"a", 0}, {"b", 1}, {"abab", 2}}, {{"ab", "ab"}}),
                     ErrorCode::InvalidTokenizer);
    CHECK_ERROR_CODE(Tokenizer::bpe({{"a", 0}}, {{"", "a"}}), ErrorCode::InvalidTokenizer);
}

TEST_CASE("bpe files load") {
    testutil::TempDir dir("bpe");
    write_file_atomic(dir / "vocab.json", R"({"a":0,"b":1,"ab":2,"abab":3})");
    write_file_atomic(dir / "merges.txt", "#version: 0.2\na b\r\n\nab ab\n");
    auto tok = Tokenizer::load_bpe(dir / "vocab.json", dir / "merges.txt");
    CHECK(tok.encode("abab") == TokenSequence{3});

    write_file_atomic(dir / "bad.txt", "a b\nab\n");
    CHECK_ERROR_CODE(Tokenizer::load_bpe(dir / "vocab.json", dir / "bad.txt"), ErrorCode::Parse);
    write_file_atomic(dir / "neg.json", R"({"a":-1})");
    CHECK_ERROR_CODE(Tokenizer::load_bpe(dir / "neg.json", dir / "merges.txt"), ErrorCode::InvalidTokenizer);
    write_file_atomic(dir / "junk.json", "{");
    CHECK_ERROR_CODE(Tokenizer::load_bpe(dir / "junk.json", dir / "merges.txt"), ErrorCode::Parse);
    CHECK_ERROR_CODE(Tokenizer::load_bpe(dir / "missing.json", dir / "merges.txt"), ErrorCode::Io);
}

TEST_CASE("character units are scalar values") {
    CHECK(char_units("abc") == std::vector<char32_t>{U'a', U'b', U'c'});
    CHECK(char_units("").empty());
    CHECK(char_units("n\xC3\xA9") == std::vector<char32_t>{U'n', U'é'});
    CHECK(char_units("\xF0\x9F\x99\x82").size() == 1);
    CHECK(char_units("\xFF" "a") == std::vector<char32_t>{U'�', U'a'});
    std::string s;
    append_utf8(s, U'é');
    CHECK(s == "\xC3\xA9");
}

TEST_CASE("byte round trip on random bytes") {
    std::mt19937_64 rng(11);
    auto tok = Tokenizer::byte();
    for (int i = 0; i < 500; ++i) {
        std::string text(rng() % 64, '\0');
        for (auto& c : text) c = static_cast<char>(rng() & 0xFF);
        CHECK(tok.decode(tok.encode(text)) == text);
    }
}

TEST_CASE("byte-level bpe round trips arbitrary bytes") {
    auto tok = byte_level_bpe({{"t", "h"}, {"th", "e"}, {"\xC4\xA0", "the"}});
    CHECK(tok.encode("the the") == TokenSequence{256 + 1, 256 + 2});
    std::mt19937_64 rng(5);
    const std::string alphabet = "the \n\x01\xC3\xA9";
    for (int i = 0; i < 500; ++i) {
        std::string text;
        for (std::size_t n = rng() % 40; n > 0; --n) text.push_back(alphabet[rng() % alphabet.size()]);
        CHECK(tok.decode(tok.encode(text)) == text);
    }
}

TEST_CASE("appending a merge rule never lengthens an encoding") {
    std::vector<MergeRule> merges{{"a", "b"}, {"b", "a"}, {"ab", "a"}, {"a", "a"}, {"ab", "ab"}};
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        for (std::size_t n = 1 + rng() % 20; n > 0; --n) text.push_back("ab"[rng() % 2]);
        std::size_t prev = text.size() + 1;
        for (std::size_t k = 0; k <= merges.size(); ++k) {
            std::vector<MergeRule> prefix(merges.begin(), merges.begin() + static_cast<long>(k));
            std::map<std::string, TokenId> vocab{{"a", 0}, {"b", 1}};
            for (const auto& [l, r] : prefix) vocab.emplace(l + r, static_cast<TokenId>(vocab.size()));
            auto tok = Tokenizer::bpe(vocab, prefix);
            const auto n = tok.encode(text).size();
            CHECK(n <= prev);
            CHECK(tok.decode(tok.encode(text)) == text);
            prev = n;
        }
    }
}

TEST_CASE("encode is deterministic across instances") {
    auto a = abab_bpe();
    auto b = abab_bpe();
    CHECK(a.encode("abab aba ab") == b.encode("abab aba ab"));
}

TEST_CASE("kind names") {
    CHECK(parse_tokenizer_kind("bpe") == TokenizerKind::Bpe);
    CHECK(to_string(TokenizerKind::Whitespace) == "whitespace");
    CHECK_ERROR_CODE(parse_tokenizer_kind("wordpiece"), ErrorCode::InvalidArgument);
}

}
