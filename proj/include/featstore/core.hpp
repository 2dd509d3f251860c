#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace featstore {

struct EntityKey {
    std::string entity_name;  // e.g. "residential_id"
    std::string value;

    bool operator==(const EntityKey&) const = default;
    bool operator<(const EntityKey& o) const {
        if (entity_name != o.entity_name) return entity_name < o.entity_name;
        return value < o.value;
    }
};

enum class Dtype { Float, Int, Category, Bool };

const char* dtype_name(Dtype d);
std::optional<Dtype> dtype_from_name(const std::string& s);

enum class CategoryTag { DomainSpecific, Contextual, Behavioral };

const char* category_tag_name(CategoryTag t);

struct FeatureSpec {
    std::string name;
    Dtype dtype = Dtype::Float;
    CategoryTag category_tag = CategoryTag::DomainSpecific;
    std::string subcategory;  // "raw", "statistical", "weather", ...

    bool operator==(const FeatureSpec&) const = default;
};

// Declarative recipe binding an entity, a source table, a TTL and a
// feature list. The unit of registration.
struct FeatureView {
    std::string name;
    std::string entity;       // entity name, e.g. "residential_id"
    int64_t ttl_seconds = 0;  // validity window used by the join
    std::vector<FeatureSpec> features;
    std::string source;  // offline store table name

    bool operator==(const FeatureView&) const = default;

    const FeatureSpec* find_feature(const std::string& feature_name) const;
};

struct FeatureCatalog {
    std::vector<FeatureSpec> entries;

    const FeatureSpec* find(const std::string& name) const;
    std::vector<std::string> names() const;
    // Catalog names carrying the given subcategory, in catalog order.
    std::vector<std::string> names_in_subcategory(const std::string& subcategory) const;
};

// The full engineered-feature taxonomy served by the energy registry.
const FeatureCatalog& energy_catalog();

// One timestamped observation for one entity.
struct EventRecord {
    EntityKey entity;
    int64_t event_timestamp = 0;  // UTC epoch seconds
    std::vector<std::pair<std::string, double>> values;
};

// Entity-timestamp rows by feature columns with an explicit missingness
// mask; the point-in-time join output and the model input.
struct TrainingMatrix {
    std::vector<EntityKey> row_entities;
    std::vector<int64_t> row_timestamps;
    std::vector<std::string> columns;
    std::vector<double> data;       // row-major, n_rows * n_cols
    std::vector<uint8_t> missing;   // same shape, 1 = masked
    std::string target;             // optional label column name

    size_t n_rows() const { return row_timestamps.size(); }
    size_t n_cols() const { return columns.size(); }

    double at(size_t row, size_t col) const { return data[row * columns.size() + col]; }
    bool is_missing(size_t row, size_t col) const { return missing[row * columns.size() + col] != 0; }
    int column_index(const std::string& name) const;

    // Reorders rows by (entity value, timestamp); the canonical order used
    // when comparing strategy outputs.
    void sort_canonical();
};

struct MetricsReport {
    double mse = 0.0;     // kWh^2
    double mae = 0.0;     // kWh
    double med_ae = 0.0;  // kWh
    int n_folds = 0;
    int n_repeats = 0;
    uint64_t seed = 0;
};

// Checks a view against its invariants and a catalog. Violations are
// returned, never thrown; an empty list means the view is valid.
std::vector<std::string> validate_view(const FeatureView& view, const FeatureCatalog& catalog);

}  // namespace featstore
