#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "featstore/ingest.hpp"
#include "featstore/registry.hpp"
#include "featstore/store.hpp"

namespace testutil {

// Self-deleting unique temp directory.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("featstore_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string sub(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Synthesizes a raw corpus and ingests it; returns the store directory.
inline std::string make_corpus(const TempDir& dir, int households, int days, uint64_t seed) {
    const std::string raw = dir.sub("raw");
    const std::string store_dir = dir.sub("store");
    const featstore::SynthFiles files =
        featstore::generate_synthetic(households, days, seed, raw);
    featstore::OfflineStore store = featstore::OfflineStore::create(store_dir);
    const auto zone = featstore::timeutil::pacific_time();
    featstore::ingest_consumption(store, {files.consumption}, zone);
    featstore::ingest_weather(store, files.weather, zone);
    featstore::ingest_metadata(store, files.metadata);
    return store_dir;
}

inline const char* registry_file() { return FEATSTORE_REGISTRY; }

}  // namespace testutil
