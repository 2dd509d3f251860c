#include "featstore/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "featstore/errors.hpp"
#include "featstore/features.hpp"
#include "featstore/solar.hpp"
#include "featstore/timeutil.hpp"

namespace featstore {

namespace {

// Event timestamp given to static (metadata-backed) records: 2000-01-01Z.
constexpr int64_t kProfileEpoch = 946684800;

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

// Extracts the value of a key=value token, empty when absent.
std::string kv_value(const std::vector<std::string>& tokens, const std::string& key) {
    const std::string prefix = key + "=";
    for (const auto& t : tokens)
        if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
    return "";
}

}  // namespace

// ==== grammar ===============================================================

std::vector<FeatureView> parse_registry_text(const std::string& text,
                                             const FeatureCatalog& catalog) {
    std::vector<FeatureView> views;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const bool indented = line[0] == ' ' || line[0] == '\t';
        const auto tokens = tokenize(line);

        if (tokens[0] == "view") {
            if (indented)
                throw Error("ParseError",
                            "line " + std::to_string(lineno) + ": view lines must not be indented");
            if (tokens.size() < 2)
                throw Error("ParseError", "line " + std::to_string(lineno) + ": view needs a name");
            FeatureView v;
            v.name = tokens[1];
            v.entity = kv_value(tokens, "entity");
            v.source = kv_value(tokens, "source");
            const std::string ttl = kv_value(tokens, "ttl");
            if (v.entity.empty() || v.source.empty() || ttl.empty())
                throw Error("ParseError", "line " + std::to_string(lineno) +
                                              ": view requires entity=, source= and ttl=");
            char* end = nullptr;
            v.ttl_seconds = std::strtoll(ttl.c_str(), &end, 10);
            if (end != ttl.c_str() + ttl.size())
                throw Error("ParseError",
                            "line " + std::to_string(lineno) + ": unparseable ttl '" + ttl + "'");
            views.push_back(std::move(v));
        } else if (tokens[0] == "feature") {
            if (!indented || views.empty())
                throw Error("ParseError", "line " + std::to_string(lineno) +
                                              ": feature lines must be indented under a view");
            if (tokens.size() != 3)
                throw Error("ParseError", "line " + std::to_string(lineno) +
                                              ": expected 'feature <name> <dtype>'");
            FeatureSpec spec;
            spec.name = tokens[1];
            const auto dtype = dtype_from_name(tokens[2]);
            if (!dtype)
                throw Error("ParseError", "line " + std::to_string(lineno) + ": unknown dtype '" +
                                              tokens[2] + "'");
            spec.dtype = *dtype;
            if (const FeatureSpec* known = catalog.find(spec.name)) {
                spec.category_tag = known->category_tag;
                spec.subcategory = known->subcategory;
            }
            views.back().features.push_back(std::move(spec));
        } else {
            throw Error("ParseError", "line " + std::to_string(lineno) + ": unexpected token '" +
                                          tokens[0] + "'");
        }
    }
    return views;
}

std::string serialize_view(const FeatureView& view) {
    std::string out = "view " + view.name + " entity=" + view.entity + " source=" + view.source +
                      " ttl=" + std::to_string(view.ttl_seconds) + "\n";
    for (const auto& f : view.features)
        out += "  feature " + f.name + " " + dtype_name(f.dtype) + "\n";
    return out;
}

std::string serialize_registry(const std::vector<FeatureView>& views) {
    std::string out;
    for (size_t i = 0; i < views.size(); ++i) {
        if (i) out += "\n";
        out += serialize_view(views[i]);
    }
    return out;
}

// ==== materialization =======================================================

int ViewStream::feature_index(const std::string& name) const {
    for (size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

struct EntityPlace {
    std::string region;
    double lat = 0, lon = 0;
    bool has_coords = false;
};

// residential_id -> region and coordinates, from the metadata table.
std::map<std::string, EntityPlace> load_places(const OfflineStore& store) {
    std::map<std::string, EntityPlace> out;
    if (!store.has_table("metadata")) return out;
    const ColumnTable meta = store.read_table("metadata");
    const Column* id = meta.find("residential_id");
    const Column* region = meta.find("region");
    const Column* lat = meta.find("latitude");
    const Column* lon = meta.find("longitude");
    if (!id) return out;
    for (size_t r = 0; r < meta.n_rows; ++r) {
        EntityPlace p;
        if (region && region->valid[r]) p.region = region->str[r];
        if (lat && lon && lat->valid[r] && lon->valid[r]) {
            p.lat = lat->f64[r];
            p.lon = lon->f64[r];
            p.has_coords = true;
        }
        out[id->str[r]] = std::move(p);
    }
    return out;
}

// Row indices of one entity's records, sorted by timestamp (defensively;
// store tables are already sorted).
struct SourceGroups {
    std::vector<std::string> entity_values;             // insertion order
    std::map<std::string, std::vector<size_t>> by_value;
};

SourceGroups group_rows(const ColumnTable& src, const Column* entity_col, const Column* ts_col) {
    SourceGroups g;
    for (size_t r = 0; r < src.n_rows; ++r) {
        const std::string key = entity_col && entity_col->valid[r] ? entity_col->str[r] : "";
        auto [it, inserted] = g.by_value.try_emplace(key);
        if (inserted) g.entity_values.push_back(key);
        it->second.push_back(r);
    }
    if (ts_col) {
        for (auto& [key, idx] : g.by_value) {
            std::stable_sort(idx.begin(), idx.end(),
                             [&](size_t a, size_t b) { return ts_col->i64[a] < ts_col->i64[b]; });
            // Identical timestamps cannot survive ingestion's dedup; keep the
            // last-read record if they somehow do.
            std::vector<size_t> unique;
            for (size_t i = 0; i < idx.size(); ++i) {
                if (!unique.empty() && ts_col->i64[idx[i]] == ts_col->i64[unique.back()]) {
                    std::fprintf(stderr,
                                 "featstore: warning: duplicate event_timestamp for entity '%s'; "
                                 "keeping the last-read record\n",
                                 key.c_str());
                    unique.back() = idx[i];
                } else {
                    unique.push_back(idx[i]);
                }
            }
            idx = std::move(unique);
        }
    }
    return g;
}

double column_number(const Column& c, size_t row, const OfflineStore& store) {
    switch (c.type) {
        case ColType::F64: return c.f64[row];
        case ColType::I64: return static_cast<double>(c.i64[row]);
        case ColType::Str: return static_cast<double>(store.encode_category(c.name, c.str[row]));
        case ColType::Boolean: return c.boolean[row] ? 1.0 : 0.0;
    }
    return 0.0;
}

bool is_solar_feature(const std::string& name) {
    return name == "solar_altitude" || name == "solar_azimuth" || name == "solar_radiation";
}

bool is_calendar_feature(const std::string& name) {
    return name == "day_percent" || name == "year_percent" || name == "is_holiday" ||
           name == "weekday" || name == "is_weekend";
}

}  // namespace

ViewStream materialize_view(const OfflineStore& store, const FeatureView& view) {
    const ColumnTable src = store.read_table(view.source);
    const Column* ts_col = src.find("timestamp");
    const bool is_static = ts_col == nullptr;

    // Deterministic category codes: encode string columns used by any
    // feature in full-table row order before any per-entity work.
    for (const auto& f : view.features)
        if (const Column* c = src.find(f.name); c && c->type == ColType::Str)
            for (size_t r = 0; r < src.n_rows; ++r)
                if (c->valid[r]) store.encode_category(c->name, c->str[r]);

    const Column* entity_col = src.find(view.entity);
    std::map<std::string, EntityPlace> places;
    const Column* region_col = nullptr;
    if (!entity_col) {
        // Entity absent from the source table: map entities through the
        // metadata table onto a region-keyed source (household weather).
        region_col = src.find("region");
        places = load_places(store);
    } else if (std::any_of(view.features.begin(), view.features.end(),
                           [](const FeatureSpec& f) { return is_solar_feature(f.name); })) {
        places = load_places(store);
    }

    const SourceGroups groups = group_rows(src, entity_col ? entity_col : region_col, ts_col);

    const FeatureConfig& cfg = feature_config();
    const Column* energy_col = src.find("energy");

    ViewStream stream;
    for (const auto& f : view.features) stream.feature_names.push_back(f.name);
    const size_t n_feats = view.features.size();

    // The entities served: direct groups, or all metadata households mapped
    // onto their region's group.
    std::vector<std::pair<std::string, const std::vector<size_t>*>> blocks;
    if (entity_col || !region_col) {
        for (const auto& value : groups.entity_values)
            blocks.emplace_back(value, &groups.by_value.at(value));
    } else {
        for (const auto& [id, place] : places) {
            const auto it = groups.by_value.find(place.region);
            if (it != groups.by_value.end()) blocks.emplace_back(id, &it->second);
        }
    }

    for (const auto& [entity_value, rows_ptr] : blocks) {
        const std::vector<size_t>& rows = *rows_ptr;
        ViewStream::Block block;
        const size_t n = rows.size();
        block.ts.reserve(n);
        if (is_static)
            block.ts.assign(n, kProfileEpoch);
        else
            for (size_t r : rows) block.ts.push_back(ts_col->i64[r]);
        block.values.assign(n_feats, std::vector<double>(n, 0.0));
        block.valid.assign(n_feats, std::vector<uint8_t>(n, 0));

        // Shared per-entity computations.
        std::vector<RollingStats> rolling;
        const bool needs_rolling =
            std::any_of(view.features.begin(), view.features.end(), [](const FeatureSpec& f) {
                return f.name == "energy_mean" || f.name == "energy_std";
            });
        if (needs_rolling && energy_col && !is_static) {
            std::vector<std::pair<int64_t, double>> series;
            series.reserve(n);
            for (size_t i = 0; i < n; ++i)
                series.emplace_back(block.ts[i],
                                    energy_col->valid[rows[i]] ? energy_col->f64[rows[i]] : 0.0);
            rolling = rolling_stats(series, 10);
        }

        const EntityPlace* place = nullptr;
        if (const auto it = places.find(entity_value); it != places.end()) place = &it->second;

        for (size_t fi = 0; fi < n_feats; ++fi) {
            const std::string& name = view.features[fi].name;
            auto& vals = block.values[fi];
            auto& ok = block.valid[fi];

            if (name == "energy_mean" || name == "energy_std") {
                const bool mean = name == "energy_mean";
                for (size_t i = 0; i < rolling.size(); ++i)
                    if (rolling[i].complete) {
                        vals[i] = mean ? rolling[i].mean : rolling[i].std;
                        ok[i] = 1;
                    }
            } else if (is_solar_feature(name)) {
                if (place && place->has_coords) {
                    for (size_t i = 0; i < n; ++i) {
                        const SolarPosition sp =
                            solar_position(place->lat, place->lon, block.ts[i]);
                        vals[i] = name == "solar_altitude"  ? sp.altitude
                                  : name == "solar_azimuth" ? sp.azimuth
                                                            : sp.clear_sky_radiation;
                        ok[i] = 1;
                    }
                }
            } else if (is_calendar_feature(name)) {
                for (size_t i = 0; i < n; ++i) {
                    if (name == "day_percent" || name == "year_percent") {
                        const TimeFeatures tf = time_features(block.ts[i], cfg.tz_offset_hours);
                        vals[i] = name == "day_percent" ? tf.day_percent : tf.year_percent;
                    } else {
                        const CalendarFeatures cf =
                            calendar_features(block.ts[i], cfg.tz_offset_hours, cfg.holidays);
                        vals[i] = name == "is_holiday"   ? (cf.is_holiday ? 1.0 : 0.0)
                                  : name == "weekday"    ? static_cast<double>(cf.weekday)
                                                         : (cf.is_weekend ? 1.0 : 0.0);
                    }
                    ok[i] = 1;
                }
            } else if (const Column* c = src.find(name)) {
                for (size_t i = 0; i < n; ++i)
                    if (c->valid[rows[i]]) {
                        vals[i] = column_number(*c, rows[i], store);
                        ok[i] = 1;
                    }
            }
            // Unknown derivations leave every cell invalid (masked).
        }
        stream.by_entity.emplace(entity_value, std::move(block));
    }

    store.flush_categories();
    return stream;
}

// ==== registry ==============================================================

Registry::Registry(const OfflineStore* store, FeatureCatalog catalog)
    : store_(store), catalog_(std::move(catalog)) {}

Registry Registry::load(const std::string& registry_file, const OfflineStore* store,
                        FeatureCatalog catalog) {
    std::ifstream in(registry_file);
    if (!in) throw Error("FileNotFound", "cannot open registry: " + registry_file);
    std::ostringstream ss;
    ss << in.rdbuf();

    Registry reg(store, std::move(catalog));
    for (const auto& view : parse_registry_text(ss.str(), reg.catalog_)) reg.register_view(view);
    return reg;
}

void Registry::register_view(const FeatureView& view) {
    const auto violations = validate_view(view, catalog_);
    if (!violations.empty()) {
        std::string msg = "view '" + view.name + "':";
        for (const auto& v : violations) msg += " " + v + ";";
        throw Error("InvalidView", msg);
    }
    if (find_view(view.name)) throw Error("DuplicateView", "view already registered: " + view.name);
    if (!store_ || !store_->has_table(view.source))
        throw Error("UnknownSource", "source table not in store: " + view.source);
    views_.push_back(view);
}

const FeatureView* Registry::find_view(const std::string& name) const {
    for (const auto& v : views_)
        if (v.name == name) return &v;
    return nullptr;
}

std::pair<const FeatureView*, std::string> Registry::resolve(const std::string& requested) const {
    const size_t colon = requested.find(':');
    if (colon != std::string::npos) {
        const std::string view_name = requested.substr(0, colon);
        const std::string feat = requested.substr(colon + 1);
        const FeatureView* view = find_view(view_name);
        if (!view || !view->find_feature(feat))
            throw Error("UnknownFeature", "cannot resolve '" + requested + "'");
        return {view, feat};
    }
    for (const auto& v : views_)
        if (v.find_feature(requested)) return {&v, requested};
    throw Error("UnknownFeature", "no registered view serves '" + requested + "'");
}

TrainingMatrix Registry::point_in_time_join(const EntityQuery& query) const {
    std::vector<std::pair<const FeatureView*, std::string>> resolved;
    resolved.reserve(query.requested.size());
    for (const auto& name : query.requested) resolved.push_back(resolve(name));

    // Materialize each needed view once per call; nothing is cached across
    // calls, so retrieval honestly pays the preparation cost.
    std::map<std::string, ViewStream> streams;
    for (const auto& [view, feat] : resolved)
        if (!streams.count(view->name)) streams.emplace(view->name, materialize_view(*store_, *view));

    const size_t n_rows = query.rows.size();
    const size_t n_cols = query.requested.size();
    TrainingMatrix m;
    m.columns = query.requested;
    m.row_entities.reserve(n_rows);
    m.row_timestamps.reserve(n_rows);
    for (const auto& [entity, t] : query.rows) {
        m.row_entities.push_back(entity);
        m.row_timestamps.push_back(t);
    }
    m.data.assign(n_rows * n_cols, 0.0);
    m.missing.assign(n_rows * n_cols, 1);

    for (size_t ci = 0; ci < n_cols; ++ci) {
        const FeatureView* view = resolved[ci].first;
        const ViewStream& stream = streams.at(view->name);
        const int fi = stream.feature_index(resolved[ci].second);
        if (fi < 0) continue;

        for (size_t ri = 0; ri < n_rows; ++ri) {
            const auto& [entity, t] = query.rows[ri];
            if (entity.entity_name != view->entity) continue;  // masked, not an error
            const auto it = stream.by_entity.find(entity.value);
            if (it == stream.by_entity.end()) continue;
            const ViewStream::Block& block = it->second;

            // Latest record at or before t.
            const auto ub = std::upper_bound(block.ts.begin(), block.ts.end(), t);
            if (ub == block.ts.begin()) continue;
            const size_t idx = static_cast<size_t>(ub - block.ts.begin()) - 1;
            if (t - block.ts[idx] > view->ttl_seconds) continue;  // TTL inclusive at exactly tau
            if (!block.valid[static_cast<size_t>(fi)][idx]) continue;
            m.data[ri * n_cols + ci] = block.values[static_cast<size_t>(fi)][idx];
            m.missing[ri * n_cols + ci] = 0;
        }
    }
    return m;
}

TrainingMatrix Registry::get_subset(const std::vector<std::string>& entity_ids, int64_t t0,
                                    int64_t t1, const std::vector<std::string>& features) const {
    if (t0 > t1) throw Error("EmptyRange", "time range start is after its end");

    const FeatureView* driving = nullptr;
    for (const auto& v : views_)
        if (v.source == "consumption") {
            driving = &v;
            break;
        }
    if (!driving && !views_.empty()) driving = &views_.front();
    if (!driving) throw Error("UnknownFeature", "registry has no views");

    const ColumnTable src = store_->read_table(driving->source);
    const Column* ent = src.find(driving->entity);
    const Column* ts = src.find("timestamp");
    if (!ent || !ts)
        throw Error("MissingColumn",
                    "driving table lacks '" + driving->entity + "' or 'timestamp'");

    EntityQuery query;
    query.requested = features;
    for (const auto& id : entity_ids) {
        std::vector<int64_t> stamps;
        for (size_t r = 0; r < src.n_rows; ++r)
            if (ent->valid[r] && ent->str[r] == id && ts->i64[r] >= t0 && ts->i64[r] <= t1)
                stamps.push_back(ts->i64[r]);
        std::sort(stamps.begin(), stamps.end());
        for (int64_t t : stamps) query.rows.push_back({{driving->entity, id}, t});
    }
    return point_in_time_join(query);
}

}  // namespace featstore
