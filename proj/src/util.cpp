#include "emlaw/util.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emlaw/error.hpp"

namespace emlaw {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

void Fnv1a::update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= kFnvPrime;
    }
}

void Fnv1a::update(std::span<const std::uint32_t> words) noexcept {
    for (std::uint32_t w : words) {
        for (int shift = 0; shift < 32; shift += 8) {
            state_ ^= (w >> shift) & 0xffU;
            state_ *= kFnvPrime;
        }
    }
}

std::string Fnv1a::hex() const {
    std::array<char, 17> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + 16, state_, 16);
    std::string out(buf.data(), end);
    return std::string(16 - out.size(), '0') + out;
}

std::string hash_hex(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

std::string hash_file(const std::filesystem::path& path) {
    return hash_hex(read_file(path));
}

std::string format_double(double value) {
    if (!std::isfinite(value)) {
        return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw Error(ErrorCode::Io, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

}  // namespace emlaw
