#include "featstore/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "featstore/csv.hpp"
#include "featstore/errors.hpp"
#include "featstore/parquet.hpp"
#include "featstore/timeutil.hpp"
#include "featstore/version.hpp"

namespace fs = std::filesystem;

namespace featstore {

namespace {
constexpr const char* kManifest = "manifest.json";
constexpr const char* kCategories = "categories.json";

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

OfflineStore OfflineStore::open(const std::string& dir) {
    const fs::path manifest = fs::path(dir) / kManifest;
    if (!fs::exists(manifest))
        throw Error("StoreMissing", "no store at " + dir + " (missing manifest.json)");

    OfflineStore store;
    store.dir_ = dir;
    const auto j = nlohmann::json::parse(read_text(manifest.string()));
    for (const auto& [name, entry] : j.at("tables").items())
        store.tables_[name] = entry.at("rows").get<int64_t>();

    const fs::path cats = fs::path(dir) / kCategories;
    if (fs::exists(cats)) store.categories_ = CategoryEncoder::from_json(read_text(cats.string()));
    return store;
}

OfflineStore OfflineStore::create(const std::string& dir) {
    fs::create_directories(dir);
    OfflineStore store;
    store.dir_ = dir;
    store.save_manifest();
    return store;
}

bool OfflineStore::has_table(const std::string& name) const { return tables_.count(name) > 0; }

std::vector<std::string> OfflineStore::table_names() const {
    std::vector<std::string> out;
    for (const auto& [name, rows] : tables_) out.push_back(name);
    return out;
}

int64_t OfflineStore::table_rows(const std::string& name) const {
    const auto it = tables_.find(name);
    if (it == tables_.end()) throw Error("UnknownSource", "no such table: " + name);
    return it->second;
}

std::string OfflineStore::table_path(const std::string& name) const {
    if (!has_table(name)) throw Error("UnknownSource", "no such table: " + name);
    return (fs::path(dir_) / (name + ".parquet")).string();
}

ColumnTable OfflineStore::read_table(const std::string& name) const {
    return parquet::read_table(table_path(name));
}

void OfflineStore::write_table(const std::string& name, const ColumnTable& table) {
    parquet::write_table((fs::path(dir_) / (name + ".parquet")).string(), table);
    write_file_atomic((fs::path(dir_) / (name + ".csv")).string(), table_to_csv(table));
    tables_[name] = static_cast<int64_t>(table.n_rows);
    save_manifest();
}

void OfflineStore::save_categories() const {
    write_file_atomic((fs::path(dir_) / kCategories).string(), categories_.to_json());
}

int OfflineStore::encode_category(const std::string& column, const std::string& value) const {
    std::lock_guard<std::mutex> lock(*categories_mu_);
    const int before = categories_.lookup(column, value);
    if (before >= 0) return before;
    categories_dirty_ = true;
    return categories_.encode(column, value);
}

void OfflineStore::flush_categories() const {
    std::lock_guard<std::mutex> lock(*categories_mu_);
    if (!categories_dirty_) return;
    write_file_atomic((fs::path(dir_) / kCategories).string(), categories_.to_json());
    categories_dirty_ = false;
}

void OfflineStore::save_manifest() const {
    nlohmann::json j;
    j["version"] = FEATSTORE_VERSION;
    j["tables"] = nlohmann::json::object();
    for (const auto& [name, rows] : tables_) {
        j["tables"][name] = {{"file", name + ".parquet"}, {"rows", rows}};
    }
    write_file_atomic((fs::path(dir_) / kManifest).string(), j.dump(2) + "\n");
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("FileWrite", "cannot open for writing: " + tmp);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error("FileWrite", "short write: " + tmp);
    }
    fs::rename(tmp, path);
}

std::string format_double(double v) {
    // Shortest decimal form that parses back to the same bits.
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

std::string table_to_csv(const ColumnTable& table) {
    std::string out;
    for (size_t i = 0; i < table.cols.size(); ++i) {
        if (i) out += ',';
        out += csv::escape_field(table.cols[i].name);
    }
    out += '\n';
    for (size_t r = 0; r < table.n_rows; ++r) {
        for (size_t ci = 0; ci < table.cols.size(); ++ci) {
            if (ci) out += ',';
            const auto& c = table.cols[ci];
            if (!c.valid[r]) continue;  // nulls are empty fields
            switch (c.type) {
                case ColType::F64: out += format_double(c.f64[r]); break;
                case ColType::I64:
                    // Epoch-second timestamp columns render as ISO-8601 UTC so
                    // the mirror is readable and re-ingestable as-is.
                    if (c.name == "timestamp")
                        out += timeutil::format_utc(c.i64[r]);
                    else
                        out += std::to_string(c.i64[r]);
                    break;
                case ColType::Str: out += csv::escape_field(c.str[r]); break;
                case ColType::Boolean: out += c.boolean[r] ? "true" : "false"; break;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace featstore
