#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace emlaw {

// 64-bit FNV-1a; stable across platforms and runs.
class Fnv1a {
public:
    void update(std::string_view bytes) noexcept;
    void update(std::span<const std::uint32_t> words) noexcept;
    std::uint64_t value() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

// Shortest round-trip decimal form.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace emlaw
