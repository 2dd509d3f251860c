#include "featstore/core.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace featstore {

const char* dtype_name(Dtype d) {
    switch (d) {
        case Dtype::Float: return "float";
        case Dtype::Int: return "int";
        case Dtype::Category: return "category";
        case Dtype::Bool: return "bool";
    }
    return "float";
}

std::optional<Dtype> dtype_from_name(const std::string& s) {
    if (s == "float") return Dtype::Float;
    if (s == "int") return Dtype::Int;
    if (s == "category") return Dtype::Category;
    if (s == "bool") return Dtype::Bool;
    return std::nullopt;
}

const char* category_tag_name(CategoryTag t) {
    switch (t) {
        case CategoryTag::DomainSpecific: return "domain_specific";
        case CategoryTag::Contextual: return "contextual";
        case CategoryTag::Behavioral: return "behavioral";
    }
    return "contextual";
}

const FeatureSpec* FeatureView::find_feature(const std::string& feature_name) const {
    for (const auto& f : features)
        if (f.name == feature_name) return &f;
    return nullptr;
}

const FeatureSpec* FeatureCatalog::find(const std::string& name) const {
    for (const auto& f : entries)
        if (f.name == name) return &f;
    return nullptr;
}

std::vector<std::string> FeatureCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& f : entries) out.push_back(f.name);
    return out;
}

std::vector<std::string> FeatureCatalog::names_in_subcategory(const std::string& subcategory) const {
    std::vector<std::string> out;
    for (const auto& f : entries)
        if (f.subcategory == subcategory) out.push_back(f.name);
    return out;
}

const FeatureCatalog& energy_catalog() {
    static const FeatureCatalog catalog = [] {
        using D = Dtype;
        using T = CategoryTag;
        FeatureCatalog c;
        auto add = [&](const char* name, D dt, T tag, const char* sub) {
            c.entries.push_back({name, dt, tag, sub});
        };
        add("energy", D::Float, T::DomainSpecific, "raw");
        add("energy_mean", D::Float, T::DomainSpecific, "statistical");
        add("energy_std", D::Float, T::DomainSpecific, "statistical");
        add("temperature", D::Float, T::Contextual, "weather");
        add("humidity", D::Float, T::Contextual, "weather");
        add("pressure", D::Float, T::Contextual, "weather");
        add("weather", D::Category, T::Contextual, "weather");
        add("solar_altitude", D::Float, T::Contextual, "weather");
        add("solar_azimuth", D::Float, T::Contextual, "weather");
        add("solar_radiation", D::Float, T::Contextual, "weather");
        add("residential_id", D::Category, T::Contextual, "building_properties");
        add("house_type", D::Category, T::Contextual, "building_properties");
        add("facing", D::Category, T::Contextual, "building_properties");
        add("RUs", D::Int, T::Contextual, "building_properties");
        add("SN", D::Bool, T::Contextual, "building_properties");
        add("FAGF", D::Bool, T::Contextual, "building_properties");
        add("FPG", D::Bool, T::Contextual, "building_properties");
        add("IFRHG", D::Bool, T::Contextual, "building_properties");
        add("NAC", D::Bool, T::Contextual, "building_properties");
        add("FAC", D::Bool, T::Contextual, "building_properties");
        add("PAC", D::Bool, T::Contextual, "building_properties");
        add("BHE", D::Bool, T::Contextual, "building_properties");
        add("IFRHE", D::Bool, T::Contextual, "building_properties");
        add("WRHIR", D::Bool, T::Contextual, "building_properties");
        add("GEOTH", D::Bool, T::Contextual, "building_properties");
        add("day_percent", D::Float, T::Contextual, "time");
        add("year_percent", D::Float, T::Contextual, "time");
        add("is_holiday", D::Bool, T::Behavioral, "sociological");
        add("weekday", D::Int, T::Behavioral, "sociological");
        add("is_weekend", D::Bool, T::Behavioral, "sociological");
        add("region", D::Category, T::Behavioral, "sociological");
        add("latitude", D::Float, T::Contextual, "geolocation");
        add("longitude", D::Float, T::Contextual, "geolocation");
        return c;
    }();
    return catalog;
}

int TrainingMatrix::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

void TrainingMatrix::sort_canonical() {
    const size_t n = n_rows();
    const size_t w = n_cols();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (!(row_entities[a] == row_entities[b])) return row_entities[a] < row_entities[b];
        return row_timestamps[a] < row_timestamps[b];
    });

    std::vector<EntityKey> ents(n);
    std::vector<int64_t> ts(n);
    std::vector<double> d(data.size());
    std::vector<uint8_t> m(missing.size());
    for (size_t i = 0; i < n; ++i) {
        const size_t src = order[i];
        ents[i] = std::move(row_entities[src]);
        ts[i] = row_timestamps[src];
        std::copy_n(data.begin() + static_cast<ptrdiff_t>(src * w), w, d.begin() + static_cast<ptrdiff_t>(i * w));
        std::copy_n(missing.begin() + static_cast<ptrdiff_t>(src * w), w, m.begin() + static_cast<ptrdiff_t>(i * w));
    }
    row_entities = std::move(ents);
    row_timestamps = std::move(ts);
    data = std::move(d);
    missing = std::move(m);
}

std::vector<std::string> validate_view(const FeatureView& view, const FeatureCatalog& catalog) {
    std::vector<std::string> violations;
    if (view.ttl_seconds <= 0) violations.push_back("nonpositive ttl");
    if (view.features.empty()) violations.push_back("empty feature list");
    if (view.name.empty()) violations.push_back("empty view name");
    if (view.entity.empty()) violations.push_back("empty entity name");
    std::set<std::string> seen;
    for (const auto& f : view.features) {
        if (!seen.insert(f.name).second)
            violations.push_back("duplicate feature: " + f.name);
        if (catalog.find(f.name) == nullptr)
            violations.push_back("unknown feature: " + f.name);
    }
    return violations;
}

}  // namespace featstore
