#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "featstore/features.hpp"
#include "featstore/table.hpp"

namespace featstore {

// Offline store: one Parquet file per logical table under a single
// directory, plus a manifest and the persisted category-code mapping.
class OfflineStore {
  public:
    // Opens an existing store; throws StoreMissing when the directory or
    // manifest is absent.
    static OfflineStore open(const std::string& dir);
    // Creates the directory (if needed) and an empty manifest.
    static OfflineStore create(const std::string& dir);

    const std::string& dir() const { return dir_; }
    bool has_table(const std::string& name) const;
    std::vector<std::string> table_names() const;
    int64_t table_rows(const std::string& name) const;
    std::string table_path(const std::string& name) const;

    // Reads the table from its Parquet file (counted by the source-open
    // instrumentation).
    ColumnTable read_table(const std::string& name) const;
    // Writes table as Parquet plus a CSV mirror and updates the manifest.
    void write_table(const std::string& name, const ColumnTable& table);

    CategoryEncoder& categories() { return categories_; }
    const CategoryEncoder& categories() const { return categories_; }
    void save_categories() const;

    // Thread-safe code assignment usable from read paths; new codes are
    // kept dirty until flush_categories persists them.
    int encode_category(const std::string& column, const std::string& value) const;
    void flush_categories() const;

  private:
    std::string dir_;
    std::map<std::string, int64_t> tables_;  // name -> row count
    mutable CategoryEncoder categories_;
    // In a unique_ptr so the store stays movable.
    std::unique_ptr<std::mutex> categories_mu_ = std::make_unique<std::mutex>();
    mutable bool categories_dirty_ = false;

    void save_manifest() const;
};

// Writes `text` to `path` atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& text);

// CSV mirror of a column table, null cells empty; doubles use the shortest
// representation that round-trips exactly.
std::string table_to_csv(const ColumnTable& table);
std::string format_double(double v);

}  // namespace featstore
