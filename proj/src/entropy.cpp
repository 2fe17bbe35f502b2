#include "emlaw/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "emlaw/error.hpp"
#include "emlaw/tokenize.hpp"

namespace emlaw {

void EmpiricalDistribution::add(std::uint32_t unit, std::uint64_t n) {
    if (n == 0) {
        return;
    }
    counts[unit] += n;
    total += n;
}

void EmpiricalDistribution::merge(const EmpiricalDistribution& other) {
    for (const auto& [unit, n] : other.counts) {
        add(unit, n);
    }
}

double EmpiricalDistribution::probability(std::uint32_t unit) const {
    auto it = counts.find(unit);
    if (it == counts.end() || total == 0) {
        return 0.0;
    }
    return static_cast<double>(it->second) / static_cast<double>(total);
}

EmpiricalDistribution histogram(std::span<const TokenId> units) {
    EmpiricalDistribution d;
    for (TokenId u : units) {
        d.add(u);
    }
    return d;
}

double normalized_entropy(double bits, std::size_t support_size) {
    if (support_size <= 1) {
        return 1.0;
    }
    return std::clamp(bits / std::log2(static_cast<double>(support_size)), 0.0, 1.0);
}

EntropyEstimate shannon_entropy(const EmpiricalDistribution& dist) {
    if (dist.empty()) {
        throw Error(ErrorCode::EmptyDistribution, "entropy of an empty distribution");
    }
    const double total = static_cast<double>(dist.total);
    // Kahan-compensated sum of -p log2 p, in unit-id order.
    double sum = 0.0;
    double carry = 0.0;
    for (const auto& [unit, n] : dist.counts) {
        const double p = static_cast<double>(n) / total;
        const double term = -p * std::log2(p) - carry;
        const double next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    EntropyEstimate est;
    est.support_size = dist.support();
    const double upper = std::log2(static_cast<double>(est.support_size));
    est.bits = est.support_size == 1 ? 0.0 : std::clamp(sum, 0.0, upper);
    est.normalized = normalized_entropy(est.bits, est.support_size);
    return est;
}

EntropyEstimate instance_entropy(std::span<const TokenId> sequence) {
    if (sequence.empty()) {
        throw Error(ErrorCode::EmptySequence, "instance entropy of an empty sequence");
    }
    return shannon_entropy(histogram(sequence));
}

LevelSets build_level_sets(std::span<const SampleRecord> records) {
    LevelSets sets;
    std::optional<std::size_t> answer_len;
    for (const auto& rec : records) {
        if (!rec.distance) {
            throw Error(ErrorCode::MissingDistance,
                        "record " + std::to_string(rec.id) + " has not been scored");
        }
        if (!answer_len) {
            answer_len = rec.answer.size();
        } else if (*answer_len != rec.answer.size()) {
            throw Error(ErrorCode::InconsistentLength,
                        "record " + std::to_string(rec.id) + " has answer length " +
                            std::to_string(rec.answer.size()) + ", expected " +
                            std::to_string(*answer_len));
        }
        auto& set = sets[*rec.distance];
        ++set.instances;
        for (TokenId t : rec.answer) {
            set.tokens.add(t);
        }
    }
    return sets;
}

EntropyEstimate level_set_entropy(const EmpiricalDistribution& dist) {
    return shannon_entropy(dist);
}

EmpiricalDistribution char_histogram(std::span<const std::string> texts) {
    EmpiricalDistribution d;
    for (const auto& text : texts) {
        for (char32_t cp : char_units(text)) {
            d.add(static_cast<std::uint32_t>(cp));
        }
    }
    return d;
}

EntropyEstimate char_entropy(std::span<const std::string> texts) {
    return shannon_entropy(char_histogram(texts));
}

}  // namespace emlaw
