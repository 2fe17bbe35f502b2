#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace emlaw {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

// One discoverable-memorization instance: prompt p, answer s, and (once
// generated and scored) the response r with its edit distance d(r, s).
struct SampleRecord {
    std::uint64_t id = 0;
    TokenSequence prompt;
    TokenSequence answer;
    std::optional<TokenSequence> response;
    std::optional<std::uint32_t> lcs;
    std::optional<std::uint32_t> distance;
    std::optional<bool> filtered;
    std::optional<std::string> source_doc;
    std::string window_hash;

    bool operator==(const SampleRecord&) const = default;
};

}  // namespace emlaw
