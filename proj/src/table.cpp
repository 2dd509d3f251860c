#include "featstore/table.hpp"

#include "featstore/errors.hpp"

namespace featstore {

const char* col_type_name(ColType t) {
    switch (t) {
        case ColType::F64: return "f64";
        case ColType::I64: return "i64";
        case ColType::Str: return "str";
        case ColType::Boolean: return "bool";
    }
    return "f64";
}

void Column::push_null() {
    switch (type) {
        case ColType::F64: f64.push_back(0.0); break;
        case ColType::I64: i64.push_back(0); break;
        case ColType::Str: str.emplace_back(); break;
        case ColType::Boolean: boolean.push_back(0); break;
    }
    valid.push_back(0);
}

Column& ColumnTable::add_column(const std::string& name, ColType type) {
    for (const auto& c : cols)
        if (c.name == name) throw Error("DuplicateColumn", "column already exists: " + name);
    Column c;
    c.name = name;
    c.type = type;
    cols.push_back(std::move(c));
    return cols.back();
}

const Column* ColumnTable::find(const std::string& name) const {
    for (const auto& c : cols)
        if (c.name == name) return &c;
    return nullptr;
}

Column* ColumnTable::find(const std::string& name) {
    for (auto& c : cols)
        if (c.name == name) return &c;
    return nullptr;
}

int ColumnTable::index_of(const std::string& name) const {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

template <typename T>
void apply_keep(std::vector<T>& v, const std::vector<uint8_t>& keep) {
    if (v.empty()) return;
    size_t w = 0;
    for (size_t i = 0; i < v.size(); ++i)
        if (keep[i]) {
            if (w != i) v[w] = std::move(v[i]);
            ++w;
        }
    v.resize(w);
}

template <typename T>
void apply_order(std::vector<T>& v, const std::vector<size_t>& order) {
    if (v.empty()) return;
    std::vector<T> out(order.size());
    for (size_t i = 0; i < order.size(); ++i) out[i] = std::move(v[order[i]]);
    v = std::move(out);
}

}  // namespace

void ColumnTable::filter_rows(const std::vector<uint8_t>& keep) {
    for (auto& c : cols) {
        apply_keep(c.f64, keep);
        apply_keep(c.i64, keep);
        apply_keep(c.str, keep);
        apply_keep(c.boolean, keep);
        apply_keep(c.valid, keep);
    }
    size_t n = 0;
    for (uint8_t k : keep)
        if (k) ++n;
    n_rows = n;
}

void ColumnTable::reorder_rows(const std::vector<size_t>& order) {
    for (auto& c : cols) {
        apply_order(c.f64, order);
        apply_order(c.i64, order);
        apply_order(c.str, order);
        apply_order(c.boolean, order);
        apply_order(c.valid, order);
    }
    n_rows = order.size();
}

void ColumnTable::append_row_from(const ColumnTable& src, size_t src_row) {
    for (size_t ci = 0; ci < cols.size(); ++ci) {
        auto& dst = cols[ci];
        const auto& s = src.cols[ci];
        if (!s.valid[src_row]) {
            dst.push_null();
            continue;
        }
        switch (dst.type) {
            case ColType::F64: dst.push_f64(s.f64[src_row]); break;
            case ColType::I64: dst.push_i64(s.i64[src_row]); break;
            case ColType::Str: dst.push_str(s.str[src_row]); break;
            case ColType::Boolean: dst.push_bool(s.boolean[src_row] != 0); break;
        }
    }
    ++n_rows;
}

}  // namespace featstore
