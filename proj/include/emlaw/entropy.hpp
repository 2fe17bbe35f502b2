#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "emlaw/types.hpp"

namespace emlaw {

// Plug-in histogram over discrete units (token ids or Unicode scalars).
struct EmpiricalDistribution {
    std::map<std::uint32_t, std::uint64_t> counts;
    std::uint64_t total = 0;

    void add(std::uint32_t unit, std::uint64_t n = 1);
    void merge(const EmpiricalDistribution& other);
    std::size_t support() const noexcept { return counts.size(); }
    bool empty() const noexcept { return total == 0; }
    double probability(std::uint32_t unit) const;

    bool operator==(const EmpiricalDistribution&) const = default;
};

struct EntropyEstimate {
    double bits = 0.0;
    std::size_t support_size = 0;
    // bits / log2(support_size); 1 for a single-outcome distribution.
    double normalized = 1.0;
};

EmpiricalDistribution histogram(std::span<const TokenId> units);

// Shannon entropy in bits; throws EmptyDistribution on an empty histogram.
EntropyEstimate shannon_entropy(const EmpiricalDistribution& dist);

double normalized_entropy(double bits, std::size_t support_size);

// Entropy of a single answer's own token histogram. Throws EmptySequence.
EntropyEstimate instance_entropy(std::span<const TokenId> sequence);

// Tokens of every answer whose response sits at edit distance e, pooled.
struct LevelSet {
    std::uint64_t instances = 0;
    EmpiricalDistribution tokens;

    bool operator==(const LevelSet&) const = default;
};

using LevelSets = std::map<std::uint32_t, LevelSet>;

// Records must carry a distance (MissingDistance otherwise) and share one
// answer length (InconsistentLength otherwise).
LevelSets build_level_sets(std::span<const SampleRecord> records);

// Each level set's probabilities are normalised by its own token count,
// so the estimate is a proper Shannon entropy bounded by log2 |T_e|.
EntropyEstimate level_set_entropy(const EmpiricalDistribution& dist);

// Pooled Unicode-scalar histogram over all texts.
EmpiricalDistribution char_histogram(std::span<const std::string> texts);
EntropyEstimate char_entropy(std::span<const std::string> texts);

}  // namespace emlaw
