#pragma once

#include <filesystem>
#include <string>

// Fresh scratch directory per tag; wiped at the start of every run so stale
// artifacts never leak between test invocations.
inline std::string test_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "bvote_tests" / tag;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}
