#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "emlaw/error.hpp"
#include "emlaw/types.hpp"

#define CHECK_ERROR_CODE(expr, expected)                      \
    do {                                                      \
        bool thrown_ = false;                                 \
        try {                                                 \
            (void)(expr);                                     \
        } catch (const emlaw::Error& e_) {                    \
            thrown_ = true;                                   \
            CHECK_MESSAGE(e_.code() == (expected), e_.what()); \
        }                                                     \
        CHECK_MESSAGE(thrown_, "expected an emlaw::Error");   \
    } while (0)

namespace testutil {

inline emlaw::TokenSequence random_seq(std::mt19937_64& rng, std::size_t max_len, std::uint32_t alphabet) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::uint32_t> sym(0, alphabet - 1);
    emlaw::TokenSequence s(len(rng));
    for (auto& t : s) t = sym(rng);
    return s;
}

// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("emlaw-test-" + tag + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
