#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emlaw/types.hpp"

namespace emlaw {

enum class TokenizerKind { Whitespace, Byte, Bpe };
enum class UnknownPolicy { Error, ByteFallback };

// How BPE input is cut into pre-tokens before merging.
//   Whitespace  - split on whitespace, whitespace dropped (lossy)
//   SpacePrefix - leading whitespace stays attached to the following word
//   None        - the whole text is one pre-token
enum class PreTokenize { Whitespace, SpacePrefix, None };

using MergeRule = std::pair<std::string, std::string>;

struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::Byte;
    std::map<std::string, TokenId> vocab;
    std::vector<MergeRule> merges;  // rank = position
    UnknownPolicy unknown_policy = UnknownPolicy::Error;
    PreTokenize pretokenize = PreTokenize::Whitespace;
    // GPT-2 style byte-to-unicode remapping before merges.
    bool byte_level = false;
};

std::string_view to_string(TokenizerKind kind) noexcept;
TokenizerKind parse_tokenizer_kind(std::string_view name);

class Tokenizer {
public:
    explicit Tokenizer(TokenizerSpec spec);

    static Tokenizer byte();
    static Tokenizer whitespace();
    static Tokenizer bpe(std::map<std::string, TokenId> vocab, std::vector<MergeRule> merges,
                         UnknownPolicy policy = UnknownPolicy::Error);

    // Vocab: JSON object token -> id. Merges: one "left right" rule per line.
    static Tokenizer load_bpe(const std::filesystem::path& vocab_path,
                              const std::filesystem::path& merges_path,
                              UnknownPolicy policy = UnknownPolicy::Error);
    // Whitespace tokenizer resuming a persisted session vocabulary.
    static Tokenizer load_whitespace(const std::filesystem::path& vocab_path);

    // Non-const: the whitespace tokenizer grows its session vocabulary on
    // unseen words. Byte and BPE encoding do not touch state.
    TokenSequence encode(std::string_view text);
    std::string decode(std::span<const TokenId> tokens) const;

    TokenizerKind kind() const noexcept { return spec_.kind; }
    const TokenizerSpec& spec() const noexcept { return spec_; }
    std::size_t vocab_size() const noexcept;

    // Vocabulary as a JSON object (token -> id), sorted by token.
    std::string vocab_json() const;

private:
    struct PairHash {
        std::size_t operator()(const MergeRule& p) const noexcept;
    };

    void index_vocab();
    TokenSequence encode_bpe(std::string_view text) const;
    void encode_piece(std::string_view piece, TokenSequence& out) const;

    TokenizerSpec spec_;
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::unordered_map<MergeRule, std::size_t, PairHash> merge_rank_;
};

// Unicode scalar values of a UTF-8 string; malformed bytes map to U+FFFD.
std::vector<char32_t> char_units(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

}  // namespace emlaw
