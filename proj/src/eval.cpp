#include "featstore/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

#include "featstore/errors.hpp"
#include "featstore/store.hpp"
#include "featstore/table.hpp"

namespace featstore {

namespace {

TrainingMatrix take_rows(const TrainingMatrix& m, const std::vector<uint32_t>& rows) {
    TrainingMatrix out;
    out.columns = m.columns;
    const size_t w = m.n_cols();
    out.data.reserve(rows.size() * w);
    out.missing.reserve(rows.size() * w);
    out.row_entities.reserve(rows.size());
    out.row_timestamps.reserve(rows.size());
    for (uint32_t r : rows) {
        out.row_entities.push_back(m.row_entities[r]);
        out.row_timestamps.push_back(m.row_timestamps[r]);
        out.data.insert(out.data.end(), m.data.begin() + r * w, m.data.begin() + (r + 1) * w);
        out.missing.insert(out.missing.end(), m.missing.begin() + r * w,
                           m.missing.begin() + (r + 1) * w);
    }
    return out;
}

std::string entity_lookup_key(const EntityKey& e) { return e.entity_name + '\x1f' + e.value; }

}  // namespace

TrainingMatrix select_columns(const TrainingMatrix& m, const std::vector<std::string>& cols) {
    std::vector<int> idx;
    for (const auto& c : cols) {
        const int i = m.column_index(c);
        if (i < 0) throw Error("UnknownFeature", "column '" + c + "' not in matrix");
        idx.push_back(i);
    }
    TrainingMatrix out;
    out.columns = cols;
    out.row_entities = m.row_entities;
    out.row_timestamps = m.row_timestamps;
    const size_t n = m.n_rows(), w = m.n_cols();
    out.data.reserve(n * idx.size());
    out.missing.reserve(n * idx.size());
    for (size_t r = 0; r < n; ++r)
        for (int i : idx) {
            out.data.push_back(m.data[r * w + static_cast<size_t>(i)]);
            out.missing.push_back(m.missing[r * w + static_cast<size_t>(i)]);
        }
    return out;
}

// ==== supervised dataset ====================================================

SupervisedData build_supervised(const TrainingMatrix& matrix, int horizon_hours) {
    if (horizon_hours < 1) throw Error("InvalidArgument", "horizon must be >= 1 hour");
    const int energy_col = matrix.column_index("energy");
    if (energy_col < 0) throw Error("UnknownFeature", "supervised target needs an energy column");

    const size_t n = matrix.n_rows();
    std::unordered_map<std::string, std::unordered_map<int64_t, uint32_t>> by_entity;
    for (size_t r = 0; r < n; ++r)
        by_entity[entity_lookup_key(matrix.row_entities[r])][matrix.row_timestamps[r]] =
            static_cast<uint32_t>(r);

    const int64_t horizon = static_cast<int64_t>(horizon_hours) * 3600;
    std::vector<uint32_t> keep;
    std::vector<double> target;
    for (size_t r = 0; r < n; ++r) {
        const auto& rows = by_entity[entity_lookup_key(matrix.row_entities[r])];
        const auto it = rows.find(matrix.row_timestamps[r] + horizon);
        if (it == rows.end()) continue;
        const uint32_t succ = it->second;
        if (matrix.is_missing(succ, static_cast<size_t>(energy_col))) continue;
        keep.push_back(static_cast<uint32_t>(r));
        target.push_back(matrix.at(succ, static_cast<size_t>(energy_col)));
    }
    if (keep.empty()) throw Error("NoValidPairs", "no row has a record " +
                                                      std::to_string(horizon_hours) +
                                                      "h later for the same entity");
    return {take_rows(matrix, keep), std::move(target)};
}

// ==== metrics ===============================================================

Metrics metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error("LengthMismatch", std::to_string(y_true.size()) + " vs " +
                                          std::to_string(y_pred.size()) + " values");
    if (y_true.empty()) throw Error("EmptyInput", "metrics need at least one pair");

    const size_t n = y_true.size();
    double se = 0.0, ae = 0.0;
    std::vector<double> abs_err(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = y_pred[i] - y_true[i];
        se += d * d;
        ae += std::fabs(d);
        abs_err[i] = std::fabs(d);
    }
    std::sort(abs_err.begin(), abs_err.end());
    const double med = n % 2 == 1 ? abs_err[n / 2] : (abs_err[n / 2 - 1] + abs_err[n / 2]) / 2.0;
    return {se / static_cast<double>(n), ae / static_cast<double>(n), med};
}

// ==== cross-validation ======================================================

std::vector<std::vector<uint32_t>> cv_test_folds(size_t n_rows, int k, int repeats,
                                                 uint64_t seed) {
    const size_t kk = static_cast<size_t>(k);
    std::vector<std::vector<uint32_t>> out(static_cast<size_t>(repeats) * kk);
    for (int r = 0; r < repeats; ++r) {
        std::vector<uint32_t> order(n_rows);
        std::iota(order.begin(), order.end(), 0u);
        std::mt19937_64 rng(seed + static_cast<uint64_t>(r));
        std::shuffle(order.begin(), order.end(), rng);
        size_t pos = 0;
        for (size_t f = 0; f < kk; ++f) {
            const size_t size = n_rows / kk + (f < n_rows % kk ? 1 : 0);
            out[static_cast<size_t>(r) * kk + f].assign(order.begin() + pos,
                                                        order.begin() + pos + size);
            pos += size;
        }
    }
    return out;
}

MetricsReport cross_validate(const TrainingMatrix& features, const std::vector<double>& target,
                             const GbrtParams& params, const CvPlan& plan) {
    if (plan.k < 2 || plan.repeats < 1) throw Error("InvalidArgument", "need k >= 2, repeats >= 1");
    const size_t n = features.n_rows();
    if (target.size() != n)
        throw Error("LengthMismatch", "target length does not match the matrix");
    if (n < static_cast<size_t>(plan.k))
        throw Error("TooFewRows", "fewer rows than folds");

    // Matrix must not carry the label; the supervised builder keeps them
    // separate, and a merged matrix here would leak the target into training.
    const size_t k = static_cast<size_t>(plan.k);

    // Fold index lists, fixed up front so worker scheduling cannot affect
    // the result.
    struct Fold {
        std::vector<uint32_t> test;
        std::vector<uint32_t> train;
    };
    const auto tests = cv_test_folds(n, plan.k, plan.repeats, plan.seed);
    std::vector<Fold> folds(tests.size());
    for (size_t i = 0; i < tests.size(); ++i) {
        folds[i].test = tests[i];
        std::vector<uint8_t> held(n, 0);
        for (uint32_t r : tests[i]) held[r] = 1;
        folds[i].train.reserve(n - tests[i].size());
        // Complement in the shuffled order would equal this set; training-row
        // order does not affect the deterministic single-threaded fit.
        for (uint32_t r = 0; r < n; ++r)
            if (!held[r]) folds[i].train.push_back(r);
    }

    std::vector<Metrics> fold_metrics(folds.size());
    std::vector<std::string> fold_errors(folds.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= folds.size()) return;
            try {
                const TrainingMatrix train_x = take_rows(features, folds[i].train);
                const TrainingMatrix test_x = take_rows(features, folds[i].test);
                std::vector<double> train_y, test_y;
                for (uint32_t r : folds[i].train) train_y.push_back(target[r]);
                for (uint32_t r : folds[i].test) test_y.push_back(target[r]);

                // fit() trains on every column except the named target, so
                // the label is appended as a scratch column for the call.
                TrainingMatrix with_y = train_x;
                with_y.columns.push_back("__target__");
                TrainingMatrix packed;
                packed.columns = with_y.columns;
                packed.row_entities = train_x.row_entities;
                packed.row_timestamps = train_x.row_timestamps;
                const size_t w = train_x.n_cols();
                for (size_t r = 0; r < train_x.n_rows(); ++r) {
                    packed.data.insert(packed.data.end(), train_x.data.begin() + r * w,
                                       train_x.data.begin() + (r + 1) * w);
                    packed.data.push_back(train_y[r]);
                    packed.missing.insert(packed.missing.end(), train_x.missing.begin() + r * w,
                                          train_x.missing.begin() + (r + 1) * w);
                    packed.missing.push_back(0);
                }
                const GbrtModel model = fit(packed, "__target__", params);
                fold_metrics[i] = metrics(test_y, predict(model, test_x));
            } catch (const std::exception& e) {
                fold_errors[i] = e.what();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t n_threads = std::min<size_t>(hw, folds.size());
    std::vector<std::thread> pool;
    for (size_t t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& err : fold_errors)
        if (!err.empty()) throw Error("FoldFailed", err);

    MetricsReport report;
    report.n_folds = plan.k;
    report.n_repeats = plan.repeats;
    report.seed = plan.seed;
    for (const Metrics& m : fold_metrics) {
        report.mse += m.mse;
        report.mae += m.mae;
        report.med_ae += m.med_ae;
    }
    const double total = static_cast<double>(folds.size());
    report.mse /= total;
    report.mae /= total;
    report.med_ae /= total;
    return report;
}

// ==== ablation ==============================================================

const std::vector<std::pair<std::string, std::string>>& ablation_stages() {
    static const std::vector<std::pair<std::string, std::string>> stages = {
        {"raw", "raw"},
        {"+statistical", "statistical"},
        {"+weather", "weather"},
        {"+building", "building_properties"},
        {"+time", "time"},
        {"+geolocation", "geolocation"},
        {"+sociological", "sociological"},
    };
    return stages;
}

std::vector<std::vector<std::string>> ablation_feature_sets(
    const FeatureCatalog& catalog, const std::vector<std::string>& available) {
    std::vector<std::vector<std::string>> sets;
    std::vector<std::string> cumulative;
    for (const auto& [label, subcategory] : ablation_stages()) {
        for (const auto& name : catalog.names_in_subcategory(subcategory))
            if (std::find(available.begin(), available.end(), name) != available.end())
                cumulative.push_back(name);
        sets.push_back(cumulative);
    }
    return sets;
}

std::vector<std::string> all_entities(const OfflineStore& store) {
    const ColumnTable metadata = store.read_table("metadata");
    const Column* ids = metadata.find("residential_id");
    if (!ids) throw Error("SchemaMismatch", "metadata table lacks residential_id");
    std::vector<std::string> out;
    for (size_t r = 0; r < metadata.n_rows; ++r) out.push_back(ids->str[r]);
    return out;
}

std::pair<int64_t, int64_t> consumption_range(const OfflineStore& store) {
    const ColumnTable t = store.read_table("consumption");
    const Column* ts = t.find("timestamp");
    if (!ts || t.n_rows == 0) throw Error("EmptyTable", "consumption table has no rows");
    int64_t lo = std::numeric_limits<int64_t>::max();
    int64_t hi = std::numeric_limits<int64_t>::min();
    for (size_t r = 0; r < t.n_rows; ++r) {
        lo = std::min(lo, ts->i64[r]);
        hi = std::max(hi, ts->i64[r]);
    }
    return {lo, hi};
}

TrainingMatrix experiment_matrix(const Registry& registry, const AblationOptions& options) {
    std::vector<std::string> entities = options.entity_ids;
    if (entities.empty()) entities = all_entities(*registry.store());
    int64_t t0 = options.t0, t1 = options.t1;
    if (t0 == 0 && t1 == 0) std::tie(t0, t1) = consumption_range(*registry.store());

    std::vector<std::string> features;
    for (const FeatureView& v : registry.views())
        for (const FeatureSpec& f : v.features) features.push_back(f.name);
    return registry.get_subset(entities, t0, t1, features);
}

std::vector<AblationRow> ablation(const Registry& registry, const AblationOptions& options,
                                  const GbrtParams& params, const CvPlan& plan) {
    const TrainingMatrix full = experiment_matrix(registry, options);
    const SupervisedData supervised = build_supervised(full, options.horizon_hours);
    const auto sets = ablation_feature_sets(registry.catalog(), supervised.features.columns);

    std::vector<AblationRow> rows;
    for (size_t s = 0; s < sets.size(); ++s) {
        const TrainingMatrix projected = select_columns(supervised.features, sets[s]);
        const MetricsReport r = cross_validate(projected, supervised.target, params, plan);
        rows.push_back({ablation_stages()[s].first, r.mse, r.mae, r.med_ae,
                        static_cast<int>(sets[s].size())});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "feature_set,n_features,mse,mae,med_ae\n";
    for (const auto& r : rows)
        out += r.feature_set_label + "," + std::to_string(r.n_features) + "," +
               format_double(r.mse) + "," + format_double(r.mae) + "," + format_double(r.med_ae) +
               "\n";
    return out;
}

std::string ablation_text(const std::vector<AblationRow>& rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %9s %12s %12s %12s\n", "feature set", "#features",
                  "MSE [kWh2]", "MAE [kWh]", "medAE [kWh]");
    std::string out = buf;
    out += std::string(62, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-14s %9d %12.6f %12.6f %12.6f\n",
                      r.feature_set_label.c_str(), r.n_features, r.mse, r.mae, r.med_ae);
        out += buf;
    }
    return out;
}

// ==== importance report =====================================================

ImportanceReport importance_report(const Registry& registry, const AblationOptions& options,
                                   const GbrtParams& params, ImportanceKind kind) {
    const TrainingMatrix full = experiment_matrix(registry, options);
    const SupervisedData supervised = build_supervised(full, options.horizon_hours);

    TrainingMatrix packed = supervised.features;
    const size_t w = supervised.features.n_cols();
    packed.columns.push_back("__target__");
    packed.data.clear();
    packed.missing.clear();
    for (size_t r = 0; r < supervised.features.n_rows(); ++r) {
        packed.data.insert(packed.data.end(), supervised.features.data.begin() + r * w,
                           supervised.features.data.begin() + (r + 1) * w);
        packed.data.push_back(supervised.target[r]);
        packed.missing.insert(packed.missing.end(), supervised.features.missing.begin() + r * w,
                              supervised.features.missing.begin() + (r + 1) * w);
        packed.missing.push_back(0);
    }

    ImportanceReport report;
    report.model = fit(packed, "__target__", params);
    report.scores = importance(report.model, kind);
    return report;
}

std::string importance_csv(const ImportanceReport& report) {
    std::string out = "feature,score\n";
    for (const auto& [name, score] : report.scores)
        out += name + "," + format_double(score) + "\n";
    return out;
}

}  // namespace featstore
