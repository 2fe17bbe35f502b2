#include "emlaw/seqmetrics.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "emlaw/error.hpp"

namespace emlaw {

namespace {

// Row storage that stays on the stack for the short sequences this tool
// scores by the million (|s| = 50 by default).
class RowBuffer {
public:
    explicit RowBuffer(std::size_t n) {
        if (n > kInline) {
            heap_.resize(n);
            data_ = heap_.data();
        } else {
            data_ = inline_.data();
        }
    }
    std::uint32_t* data() noexcept { return data_; }

private:
    static constexpr std::size_t kInline = 2 * 128;
    std::array<std::uint32_t, kInline> inline_;
    std::vector<std::uint32_t> heap_;
    std::uint32_t* data_;
};

}  // namespace

std::uint32_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
    if (a.size() < b.size()) {
        std::swap(a, b);
    }
    // b is the shorter side; rows have |b| + 1 cells.
    const std::size_t n = b.size();
    if (n == 0) {
        return static_cast<std::uint32_t>(a.size());
    }
    RowBuffer buf(2 * (n + 1));
    std::uint32_t* prev = buf.data();
    std::uint32_t* cur = prev + n + 1;
    for (std::size_t j = 0; j <= n; ++j) {
        prev[j] = static_cast<std::uint32_t>(j);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        cur[0] = static_cast<std::uint32_t>(i + 1);
        const TokenId ai = a[i];
        for (std::size_t j = 0; j < n; ++j) {
            std::uint32_t sub = prev[j] + (ai == b[j] ? 0U : 1U);
            std::uint32_t del = prev[j + 1] + 1;
            std::uint32_t ins = cur[j] + 1;
            cur[j + 1] = std::min({sub, del, ins});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

std::uint32_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
    if (a.size() < b.size()) {
        std::swap(a, b);
    }
    const std::size_t n = b.size();
    if (n == 0) {
        return 0;
    }
    RowBuffer buf(2 * (n + 1));
    std::uint32_t* prev = buf.data();
    std::uint32_t* cur = prev + n + 1;
    std::fill(prev, prev + n + 1, 0U);
    cur[0] = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const TokenId ai = a[i];
        for (std::size_t j = 0; j < n; ++j) {
            cur[j + 1] = ai == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

std::uint32_t longest_common_substring(std::span<const TokenId> a, std::span<const TokenId> b) {
    if (a.size() < b.size()) {
        std::swap(a, b);
    }
    const std::size_t n = b.size();
    if (n == 0) {
        return 0;
    }
    RowBuffer buf(2 * (n + 1));
    std::uint32_t* prev = buf.data();
    std::uint32_t* cur = prev + n + 1;
    std::fill(prev, prev + 2 * (n + 1), 0U);
    std::uint32_t best = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : 0;
            best = std::max(best, cur[j + 1]);
        }
        std::swap(prev, cur);
    }
    return best;
}

FilterDecision trivial_filter(std::span<const TokenId> prompt, std::span<const TokenId> answer,
                              FilterMode mode) {
    if (answer.empty()) {
        throw Error(ErrorCode::EmptyAnswer, "trivial filter needs a non-empty answer");
    }
    FilterDecision d;
    d.answer_len = static_cast<std::uint32_t>(answer.size());
    d.lcs_length = mode == FilterMode::Subsequence ? lcs_length(prompt, answer)
                                                   : longest_common_substring(prompt, answer);
    d.excluded = 2ULL * d.lcs_length >= answer.size();
    return d;
}

}  // namespace emlaw
