#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace featstore::csv {

// Splits one CSV line. Handles double-quoted fields with "" escapes,
// comma delimiter, no embedded newlines.
std::vector<std::string> split_line(const std::string& line);

std::string escape_field(const std::string& field);

// Streaming reader over a comma-delimited file with a header row.
// Lines starting with '#' are skipped.
class Reader {
public:
    explicit Reader(const std::string& path);
    ~Reader();
    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    const std::vector<std::string>& header() const { return header_; }
    // Column index by name, -1 when missing.
    int column(const std::string& name) const;

    // Reads the next data row; false at EOF. Rows with a field count
    // different from the header are returned as-is; callers validate.
    bool next(std::vector<std::string>& fields);

private:
    struct Impl;
    Impl* impl_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace featstore::csv
