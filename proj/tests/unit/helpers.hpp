#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "enrichkit/corpus.hpp"

namespace test {

inline std::filesystem::path data(const std::string& name) {
    return std::filesystem::path(ENRICHKIT_TEST_DATA) / name;
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(ENRICHKIT_FIXTURES) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("enrichkit-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream(p, std::ios::binary) << content;
}

inline enrichkit::Document doc(std::string id, std::string text) {
    return enrichkit::Document{std::move(id), std::move(text), std::nullopt, {}};
}

}  // namespace test
