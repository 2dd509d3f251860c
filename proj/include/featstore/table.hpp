#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace featstore {

// Physical column types used by the offline store files.
enum class ColType { F64, I64, Str, Boolean };

const char* col_type_name(ColType t);

struct Column {
    std::string name;
    ColType type = ColType::F64;
    // Parallel storage; only the vector matching `type` is used.
    std::vector<double> f64;
    std::vector<int64_t> i64;
    std::vector<std::string> str;
    std::vector<uint8_t> boolean;
    std::vector<uint8_t> valid;  // 1 = present, 0 = null

    size_t size() const { return valid.size(); }

    void push_f64(double v) { f64.push_back(v); valid.push_back(1); }
    void push_i64(int64_t v) { i64.push_back(v); valid.push_back(1); }
    void push_str(std::string v) { str.push_back(std::move(v)); valid.push_back(1); }
    void push_bool(bool v) { boolean.push_back(v ? 1 : 0); valid.push_back(1); }
    void push_null();
};

// Simple column-major table: the unit of storage and of materialization.
// Columns live in a deque so references from add_column stay valid as
// more columns are added.
struct ColumnTable {
    std::deque<Column> cols;
    size_t n_rows = 0;

    Column& add_column(const std::string& name, ColType type);
    const Column* find(const std::string& name) const;
    Column* find(const std::string& name);
    int index_of(const std::string& name) const;

    // Keeps only rows where keep[i] != 0.
    void filter_rows(const std::vector<uint8_t>& keep);
    // Reorders all columns by `order` (order[i] = source row of new row i).
    void reorder_rows(const std::vector<size_t>& order);
    void append_row_from(const ColumnTable& src, size_t src_row);
};

}  // namespace featstore
