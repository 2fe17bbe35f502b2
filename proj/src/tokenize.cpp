#include "emlaw/tokenize.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "emlaw/error.hpp"
#include "emlaw/util.hpp"

namespace emlaw {

namespace {

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// GPT-2 bytes_to_unicode: printable bytes map to themselves, the rest are
// shifted into U+0100 and up so every byte has a visible stand-in.
const std::array<char32_t, 256>& byte_to_unicode() {
    static const std::array<char32_t, 256> table = [] {
        std::array<char32_t, 256> t{};
        char32_t next = 256;
        for (int b = 0; b < 256; ++b) {
            bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174);
            t[static_cast<std::size_t>(b)] = printable ? static_cast<char32_t>(b) : next++;
        }
        return t;
    }();
    return table;
}

const std::unordered_map<char32_t, unsigned char>& unicode_to_byte() {
    static const std::unordered_map<char32_t, unsigned char> table = [] {
        std::unordered_map<char32_t, unsigned char> t;
        const auto& fwd = byte_to_unicode();
        for (std::size_t b = 0; b < fwd.size(); ++b) {
            t.emplace(fwd[b], static_cast<unsigned char>(b));
        }
        return t;
    }();
    return table;
}

std::string fallback_name(unsigned char b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "<0x%02X>", b);
    return buf;
}

std::optional<unsigned char> parse_fallback_name(std::string_view s) {
    if (s.size() != 6 || s.substr(0, 3) != "<0x" || s[5] != '>') {
        return std::nullopt;
    }
    unsigned value = 0;
    for (char c : s.substr(3, 2)) {
        value <<= 4;
        if (c >= '0' && c <= '9') {
            value |= static_cast<unsigned>(c - '0');
        } else if (c >= 'A' && c <= 'F') {
            value |= static_cast<unsigned>(c - 'A' + 10);
        } else {
            return std::nullopt;
        }
    }
    return static_cast<unsigned char>(value);
}

std::vector<std::string_view> split_pieces(std::string_view text, PreTokenize mode) {
    std::vector<std::string_view> pieces;
    if (mode == PreTokenize::None) {
        if (!text.empty()) {
            pieces.push_back(text);
        }
        return pieces;
    }
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        if (mode == PreTokenize::Whitespace) {
            start = i;
        }
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            pieces.push_back(text.substr(start, i - start));
        }
    }
    return pieces;
}

std::map<std::string, TokenId> parse_vocab_json(const std::string& contents, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(contents);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, origin + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidTokenizer, origin + ": vocabulary must be a JSON object");
    }
    std::map<std::string, TokenId> vocab;
    for (const auto& [token, id] : doc.items()) {
        if (!id.is_number_unsigned() ||
            id.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
            throw Error(ErrorCode::InvalidTokenizer,
                        origin + ": id for '" + token + "' is not a non-negative integer");
        }
        vocab.emplace(token, id.get<TokenId>());
    }
    return vocab;
}

}  // namespace

std::string_view to_string(TokenizerKind kind) noexcept {
    switch (kind) {
        case TokenizerKind::Whitespace: return "whitespace";
        case TokenizerKind::Byte: return "byte";
        case TokenizerKind::Bpe: return "bpe";
    }
    return "byte";
}

TokenizerKind parse_tokenizer_kind(std::string_view name) {
    if (name == "whitespace") return TokenizerKind::Whitespace;
    if (name == "byte") return TokenizerKind::Byte;
    if (name == "bpe") return TokenizerKind::Bpe;
    throw Error(ErrorCode::InvalidArgument, "unknown tokenizer kind '" + std::string(name) + "'");
}

std::size_t Tokenizer::PairHash::operator()(const MergeRule& p) const noexcept {
    std::size_t h = std::hash<std::string>{}(p.first);
    return h ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

Tokenizer::Tokenizer(TokenizerSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == TokenizerKind::Byte) {
        spec_.vocab.clear();
        spec_.merges.clear();
        return;
    }
    index_vocab();
    if (spec_.kind != TokenizerKind::Bpe) {
        return;
    }
    // Each side of a rule must be a base symbol or the product of an earlier rule.
    std::unordered_set<std::string> produced;
    for (std::size_t rank = 0; rank < spec_.merges.size(); ++rank) {
        const auto& [left, right] = spec_.merges[rank];
        for (const auto* side : {&left, &right}) {
            if (side->empty() || (char_units(*side).size() != 1 && !produced.contains(*side))) {
                throw Error(ErrorCode::InvalidTokenizer,
                            "merge rule " + std::to_string(rank) + " references '" + *side +
                                "', which no earlier rule produces");
            }
        }
        produced.insert(left + right);
        merge_rank_.try_emplace(spec_.merges[rank], rank);
    }
}

void Tokenizer::index_vocab() {
    id_to_token_.assign(spec_.vocab.size(), std::string{});
    std::vector<bool> seen(spec_.vocab.size(), false);
    for (const auto& [token, id] : spec_.vocab) {
        if (id >= spec_.vocab.size() || seen[id]) {
            throw Error(ErrorCode::InvalidTokenizer,
                        "vocabulary ids must be dense and unique in [0, " +
                            std::to_string(spec_.vocab.size()) + "); offending token '" + token + "'");
        }
        seen[id] = true;
        id_to_token_[id] = token;
        token_to_id_.emplace(token, id);
    }
}

Tokenizer Tokenizer::byte() {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Byte;
    return Tokenizer(std::move(spec));
}

Tokenizer Tokenizer::whitespace() {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Whitespace;
    return Tokenizer(std::move(spec));
}

Tokenizer Tokenizer::bpe(std::map<std::string, TokenId> vocab, std::vector<MergeRule> merges,
                         UnknownPolicy policy) {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Bpe;
    spec.vocab = std::move(vocab);
    spec.merges = std::move(merges);
    spec.unknown_policy = policy;
    return Tokenizer(std::move(spec));
}

Tokenizer Tokenizer::load_bpe(const std::filesystem::path& vocab_path,
                              const std::filesystem::path& merges_path, UnknownPolicy policy) {
    auto vocab = parse_vocab_json(read_file(vocab_path), vocab_path.string());
    std::vector<MergeRule> merges;
    std::istringstream lines(read_file(merges_path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (lineno == 1 && line.starts_with("#version"))) {
            continue;
        }
        auto space = line.find(' ');
        if (space == std::string::npos || space == 0 || space + 1 == line.size()) {
            throw Error(ErrorCode::Parse, merges_path.string() + ":" + std::to_string(lineno) +
                                              ": expected \"left right\"");
        }
        merges.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Bpe;
    spec.vocab = std::move(vocab);
    spec.merges = std::move(merges);
    spec.unknown_policy = policy;
    return Tokenizer(std::move(spec));
}

Tokenizer Tokenizer::load_whitespace(const std::filesystem::path& vocab_path) {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Whitespace;
    spec.vocab = parse_vocab_json(read_file(vocab_path), vocab_path.string());
    return Tokenizer(std::move(spec));
}

std::size_t Tokenizer::vocab_size() const noexcept {
    return spec_.kind == TokenizerKind::Byte ? 256 : id_to_token_.size();
}

std::string Tokenizer::vocab_json() const {
    nlohmann::json doc = nlohmann::json::object();
    if (spec_.kind == TokenizerKind::Byte) {
        return doc.dump();
    }
    for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
        doc[id_to_token_[id]] = id;
    }
    return doc.dump(1);
}

TokenSequence Tokenizer::encode(std::string_view text) {
    switch (spec_.kind) {
        case TokenizerKind::Byte: {
            TokenSequence out;
            out.reserve(text.size());
            for (unsigned char c : text) {
                out.push_back(c);
            }
            return out;
        }
        case TokenizerKind::Whitespace: {
            TokenSequence out;
            for (auto word : split_pieces(text, PreTokenize::Whitespace)) {
                std::string key(word);
                auto it = token_to_id_.find(key);
                if (it == token_to_id_.end()) {
                    auto id = static_cast<TokenId>(id_to_token_.size());
                    it = token_to_id_.emplace(key, id).first;
                    id_to_token_.push_back(key);
                    spec_.vocab.emplace(key, id);
                }
                out.push_back(it->second);
            }
            return out;
        }
        case TokenizerKind::Bpe:
            return encode_bpe(text);
    }
    return {};
}

TokenSequence Tokenizer::encode_bpe(std::string_view text) const {
    TokenSequence out;
    for (auto piece : split_pieces(text, spec_.pretokenize)) {
        encode_piece(piece, out);
    }
    return out;
}

void Tokenizer::encode_piece(std::string_view piece, TokenSequence& out) const {
    std::vector<std::string> symbols;
    if (spec_.byte_level) {
        const auto& table = byte_to_unicode();
        for (unsigned char c : piece) {
            std::string s;
            append_utf8(s, table[c]);
            symbols.push_back(std::move(s));
        }
    } else {
        for (char32_t cp : char_units(piece)) {
            std::string s;
            append_utf8(s, cp);
            symbols.push_back(std::move(s));
        }
    }

    // Repeatedly merge every occurrence of the lowest-ranked adjacent pair.
    while (symbols.size() > 1) {
        std::size_t best_rank = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = merge_rank_.find(MergeRule{symbols[i], symbols[i + 1]});
            if (it != merge_rank_.end() && it->second < best_rank) {
                best_rank = it->second;
            }
        }
        if (best_rank == std::numeric_limits<std::size_t>::max()) {
            break;
        }
        const auto& [left, right] = spec_.merges[best_rank];
        std::vector<std::string> merged;
        merged.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                merged.push_back(left + right);
                ++i;
            } else {
                merged.push_back(std::move(symbols[i]));
            }
        }
        symbols = std::move(merged);
    }

    for (const auto& sym : symbols) {
        if (auto it = token_to_id_.find(sym); it != token_to_id_.end()) {
            out.push_back(it->second);
            continue;
        }
        if (spec_.unknown_policy == UnknownPolicy::ByteFallback && !spec_.byte_level) {
            TokenSequence bytes;
            bool complete = true;
            for (unsigned char c : sym) {
                auto it = token_to_id_.find(fallback_name(c));
                if (it == token_to_id_.end()) {
                    complete = false;
                    break;
                }
                bytes.push_back(it->second);
            }
            if (complete) {
                out.insert(out.end(), bytes.begin(), bytes.end());
                continue;
            }
        }
        throw Error(ErrorCode::UnknownToken, "no vocabulary entry for fragment '" + sym + "'");
    }
}

std::string Tokenizer::decode(std::span<const TokenId> tokens) const {
    std::string out;
    switch (spec_.kind) {
        case TokenizerKind::Byte:
            for (TokenId t : tokens) {
                if (t > 255) {
                    throw Error(ErrorCode::UnknownToken, "byte tokenizer has no id " + std::to_string(t));
                }
                out.push_back(static_cast<char>(t));
            }
            return out;
        case TokenizerKind::Whitespace:
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (tokens[i] >= id_to_token_.size()) {
                    throw Error(ErrorCode::UnknownToken, "session vocabulary has no id " +
                                                             std::to_string(tokens[i]));
                }
                if (i > 0) {
                    out.push_back(' ');
                }
                out += id_to_token_[tokens[i]];
            }
            return out;
        case TokenizerKind::Bpe:
            break;
    }
    for (TokenId t : tokens) {
        if (t >= id_to_token_.size()) {
            throw Error(ErrorCode::UnknownToken, "vocabulary has no id " + std::to_string(t));
        }
        const auto& piece = id_to_token_[t];
        if (spec_.byte_level) {
            const auto& table = unicode_to_byte();
            for (char32_t cp : char_units(piece)) {
                auto it = table.find(cp);
                if (it == table.end()) {
                    append_utf8(out, cp);
                } else {
                    out.push_back(static_cast<char>(it->second));
                }
            }
        } else if (auto b = spec_.unknown_policy == UnknownPolicy::ByteFallback
                                ? parse_fallback_name(piece)
                                : std::nullopt) {
            out.push_back(static_cast<char>(*b));
        } else {
            out += piece;
        }
    }
    return out;
}

std::vector<char32_t> char_units(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    const auto* p = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = p[i];
        std::size_t len = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if (c < 0x80) {
            out.push_back(c);
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2, cp = c & 0x1F, min = 0x80;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3, cp = c & 0x0F, min = 0x800;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4, cp = c & 0x07, min = 0x10000;
        }
        bool ok = len != 0 && i + len <= n;
        for (std::size_t k = 1; ok && k < len; ++k) {
            if ((p[i + k] & 0xC0) != 0x80) {
                ok = false;
            } else {
                cp = (cp << 6) | (p[i + k] & 0x3F);
            }
        }
        if (ok && (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) {
            ok = false;
        }
        if (ok) {
            out.push_back(cp);
            i += len;
        } else {
            out.push_back(0xFFFD);
            ++i;
        }
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace emlaw
