#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "featstore/core.hpp"
#include "featstore/store.hpp"

namespace featstore {

struct EntityQuery {
    std::vector<std::pair<EntityKey, int64_t>> rows;
    // Either "view:feature" or a bare feature name (resolved against views
    // in registration order).
    std::vector<std::string> requested;
};

// ==== registry grammar ======================================================
//
//   view <name> entity=<entity> source=<table> ttl=<seconds>
//     feature <name> <dtype>
//
// '#' comments and blank lines are ignored; feature lines are indented.

std::vector<FeatureView> parse_registry_text(const std::string& text,
                                             const FeatureCatalog& catalog);
std::string serialize_view(const FeatureView& view);
std::string serialize_registry(const std::vector<FeatureView>& views);

// ==== materialized view stream ==============================================

// One view's computed feature series, grouped by entity value and sorted by
// timestamp — the input to the point-in-time join.
struct ViewStream {
    struct Block {
        std::vector<int64_t> ts;                    // ascending
        std::vector<std::vector<double>> values;    // [feature][row]
        std::vector<std::vector<uint8_t>> valid;    // [feature][row]
    };
    std::vector<std::string> feature_names;
    std::map<std::string, Block> by_entity;

    int feature_index(const std::string& name) const;
};

// Computes every feature of `view` from its source table. Derivations are
// keyed by feature name (rolling stats, solar geometry, calendar fields,
// building encodings); any other name is passed through from the source
// column of the same name. Category codes persist through `store`'s encoder.
ViewStream materialize_view(const OfflineStore& store, const FeatureView& view);

// ==== registry ==============================================================

class Registry {
  public:
    explicit Registry(const OfflineStore* store, FeatureCatalog catalog = energy_catalog());

    // Parses, validates and registers every view in the file.
    static Registry load(const std::string& registry_file, const OfflineStore* store,
                         FeatureCatalog catalog = energy_catalog());

    // Metadata-only: never reads source data files.
    void register_view(const FeatureView& view);

    const FeatureView* find_view(const std::string& name) const;
    const std::vector<FeatureView>& views() const { return views_; }
    const FeatureCatalog& catalog() const { return catalog_; }
    const OfflineStore* store() const { return store_; }

    // Resolves a requested name to (view, feature); throws UnknownFeature.
    std::pair<const FeatureView*, std::string> resolve(const std::string& requested) const;

    // For each query row (e, t) and requested feature from view V with ttl
    // tau, attaches the value of the latest source record (e, t') with
    // t' <= t and t - t' <= tau; missing otherwise. Row order follows the
    // query; column order follows the request. Materializes on demand —
    // nothing is precomputed at registration.
    TrainingMatrix point_in_time_join(const EntityQuery& query) const;

    // Query rows at every driving-view source timestamp in [t0, t1] for the
    // given entities, then the same join. The driving view is the first
    // registered view backed by the consumption table.
    TrainingMatrix get_subset(const std::vector<std::string>& entity_ids, int64_t t0, int64_t t1,
                              const std::vector<std::string>& features) const;

  private:
    const OfflineStore* store_;
    FeatureCatalog catalog_;
    std::vector<FeatureView> views_;
};

}  // namespace featstore
