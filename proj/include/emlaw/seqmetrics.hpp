#pragma once

#include <cstdint>
#include <span>

#include "emlaw/types.hpp"

namespace emlaw {

// Minimal number of single-token insertions, deletions and substitutions
// turning a into b. Two rolling rows over the shorter sequence.
std::uint32_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b);

// Length of a longest common subsequence (not substring).
std::uint32_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);

// Length of a longest common contiguous run.
std::uint32_t longest_common_substring(std::span<const TokenId> a, std::span<const TokenId> b);

enum class FilterMode { Subsequence, Substring };

struct FilterDecision {
    std::uint32_t lcs_length = 0;
    std::uint32_t answer_len = 0;
    bool excluded = false;

    // |s| / 2, kept for display; the decision itself is 2*lcs >= |s|.
    double threshold() const noexcept { return answer_len / 2.0; }
};

// Trivial-memorization test: excluded iff LCS(prompt, answer) >= |answer| / 2.
// Throws EmptyAnswer when the answer is empty.
FilterDecision trivial_filter(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              FilterMode mode = FilterMode::Subsequence);

}  // namespace emlaw
