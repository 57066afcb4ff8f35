#pragma once

#include <atomic>
#include <filesystem>
#include <string>

namespace testutil {

// Unique scratch directory, removed on destruction.
class TmpDir {
public:
    explicit TmpDir(const std::string &tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("msse_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }

    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    std::string operator/(const std::string &name) const { return (path_ / name).string(); }
    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
