#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <unistd.h>

#include "synthaction/common.hpp"

namespace synthaction::test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("synthaction_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

/// Relative path -> FNV-1a of contents, for every regular file under root.
inline std::map<std::string, std::string> tree_digest(const fs::path& root, const std::string& skip_name = {}) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        if (!skip_name.empty() && e.path().filename() == skip_name) continue;
        const std::string bytes = read_file_bytes(e.path());
        Fnv1a h;
        h.update(bytes.data(), bytes.size());
        out[fs::relative(e.path(), root).generic_string()] = hex64(h.digest());
    }
    return out;
}

inline std::size_t tree_file_count(const fs::path& root) { return tree_digest(root).size(); }

}  // namespace synthaction::test
