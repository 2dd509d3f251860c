#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "featstore/bench.hpp"
#include "featstore/core.hpp"
#include "featstore/errors.hpp"
#include "featstore/eval.hpp"
#include "featstore/gbrt.hpp"
#include "featstore/ingest.hpp"
#include "featstore/registry.hpp"
#include "featstore/solar.hpp"
#include "featstore/store.hpp"
#include "featstore/timeutil.hpp"
#include "featstore/version.hpp"

namespace py = pybind11;
using namespace featstore;

namespace {

// Owns the store and the registry built on top of it; pointers stay stable
// behind unique_ptr so the registry's back-reference never dangles.
class PyFeatureStore {
  public:
    PyFeatureStore(const std::string& store_dir, const std::string& registry_file)
        : store_(std::make_unique<OfflineStore>(OfflineStore::open(store_dir))),
          registry_(std::make_unique<Registry>(Registry::load(registry_file, store_.get()))) {}

    const OfflineStore& store() const { return *store_; }
    const Registry& registry() const { return *registry_; }

  private:
    std::unique_ptr<OfflineStore> store_;
    std::unique_ptr<Registry> registry_;
};

using OptTime = std::optional<int64_t>;

// None/None selects the full span (the 0/0 convention of the eval helpers);
// an open end extends to the maximum timestamp.
AblationOptions make_options(const std::vector<std::string>& entities, OptTime t0, OptTime t1,
                             int horizon) {
    AblationOptions opt;
    opt.entity_ids = entities;
    opt.horizon_hours = horizon;
    if (!t0 && !t1) {
        opt.t0 = 0;
        opt.t1 = 0;
    } else {
        opt.t0 = t0.value_or(0);
        opt.t1 = t1.value_or(std::numeric_limits<int64_t>::max());
    }
    return opt;
}

GbrtParams make_params(int rounds, int depth, double learning_rate, int min_leaf,
                       double subsample, uint64_t seed) {
    GbrtParams p;
    p.n_rounds = rounds;
    p.max_depth = depth;
    p.learning_rate = learning_rate;
    p.min_samples_leaf = min_leaf;
    p.subsample = subsample;
    p.seed = seed;
    return p;
}

py::dict matrix_to_dict(const TrainingMatrix& m) {
    const auto rows = static_cast<py::ssize_t>(m.n_rows());
    const auto cols = static_cast<py::ssize_t>(m.n_cols());
    py::array_t<double> values({rows, cols});
    py::array_t<bool> missing({rows, cols});
    py::array_t<int64_t> timestamps(rows);
    auto v = values.mutable_unchecked<2>();
    auto miss = missing.mutable_unchecked<2>();
    auto ts = timestamps.mutable_unchecked<1>();
    py::list ids;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (py::ssize_t r = 0; r < rows; ++r) {
        ids.append(m.row_entities[r].value);
        ts(r) = m.row_timestamps[r];
        for (py::ssize_t c = 0; c < cols; ++c) {
            const bool gone = m.is_missing(r, c);
            miss(r, c) = gone;
            v(r, c) = gone ? nan : m.at(r, c);
        }
    }
    py::dict d;
    d["ids"] = std::move(ids);
    d["timestamps"] = std::move(timestamps);
    d["columns"] = py::cast(m.columns);
    d["values"] = std::move(values);
    d["missing"] = std::move(missing);
    return d;
}

py::dict metrics_to_dict(const MetricsReport& r) {
    py::dict d;
    d["mse"] = r.mse;
    d["mae"] = r.mae;
    d["med_ae"] = r.med_ae;
    d["n_folds"] = r.n_folds;
    d["n_repeats"] = r.n_repeats;
    d["seed"] = r.seed;
    return d;
}

py::dict stats_to_dict(const StorageStats& s) {
    py::dict d;
    d["rows_in"] = s.rows_in;
    d["rows_out"] = s.rows_out;
    d["rows_dropped_duplicate"] = s.rows_dropped_duplicate;
    d["rows_dropped_invalid"] = s.rows_dropped_invalid;
    d["elapsed"] = s.elapsed;
    return d;
}

py::dict timings_to_dict(const BenchTimings& t) {
    py::dict d;
    d["strategy"] = t.strategy;
    d["t_process"] = t.t_process;
    d["t_join_enrich"] = t.t_join_enrich;
    d["t_obtain_subset"] = t.t_obtain_subset;
    d["threads"] = t.threads;
    d["rows_joined"] = t.rows_joined;
    return d;
}

TrainingMatrix supervised_matrix(const PyFeatureStore& fs,
                                 const std::vector<std::string>& entities, OptTime t0, OptTime t1,
                                 int horizon, SupervisedData& out) {
    const AblationOptions opt = make_options(entities, t0, t1, horizon);
    const TrainingMatrix full = experiment_matrix(fs.registry(), opt);
    out = build_supervised(full, horizon);
    TrainingMatrix packed = out.features;
    packed.columns.push_back("__target__");
    TrainingMatrix repacked;
    repacked.columns = packed.columns;
    repacked.row_entities = out.features.row_entities;
    repacked.row_timestamps = out.features.row_timestamps;
    const size_t w = out.features.n_cols();
    repacked.data.reserve(out.features.n_rows() * (w + 1));
    repacked.missing.reserve(out.features.n_rows() * (w + 1));
    for (size_t r = 0; r < out.features.n_rows(); ++r) {
        repacked.data.insert(repacked.data.end(), out.features.data.begin() + r * w,
                             out.features.data.begin() + (r + 1) * w);
        repacked.data.push_back(out.target[r]);
        repacked.missing.insert(repacked.missing.end(), out.features.missing.begin() + r * w,
                                out.features.missing.begin() + (r + 1) * w);
        repacked.missing.push_back(0);
    }
    return repacked;
}

}  // namespace

PYBIND11_MODULE(_featstore, m) {
    m.doc() = "Feature management engine for household energy ML";
    m.attr("__version__") = FEATSTORE_VERSION;

    py::register_exception<Error>(m, "FeatstoreError");

    // ---- corpus and ingestion ----------------------------------------------
    m.def(
        "generate_synthetic",
        [](int households, int days, const std::string& out_dir, uint64_t seed) {
            const SynthFiles f = generate_synthetic(households, days, seed, out_dir);
            py::dict d;
            d["consumption"] = f.consumption;
            d["weather"] = f.weather;
            d["metadata"] = f.metadata;
            return d;
        },
        py::arg("households"), py::arg("days"), py::arg("out_dir"), py::arg("seed") = 0,
        "Write a deterministic synthetic raw corpus and return the file paths.");

    m.def(
        "ingest",
        [](const std::string& store_dir, const std::vector<std::string>& consumption,
           const std::string& weather, const std::string& metadata) {
            OfflineStore store = [&] {
                try {
                    return OfflineStore::open(store_dir);
                } catch (const Error&) {
                    return OfflineStore::create(store_dir);
                }
            }();
            const auto zone = timeutil::pacific_time();
            py::dict d;
            if (!consumption.empty())
                d["consumption"] = stats_to_dict(ingest_consumption(store, consumption, zone));
            if (!weather.empty()) d["weather"] = stats_to_dict(ingest_weather(store, weather, zone));
            if (!metadata.empty()) d["metadata"] = stats_to_dict(ingest_metadata(store, metadata));
            return d;
        },
        py::arg("store_dir"), py::arg("consumption") = std::vector<std::string>{},
        py::arg("weather") = "", py::arg("metadata") = "",
        "Clean raw CSVs into the offline store; returns per-table statistics.");

    m.def(
        "read_table",
        [](const std::string& store_dir, const std::string& name) {
            const OfflineStore store = OfflineStore::open(store_dir);
            const ColumnTable t = store.read_table(name);
            py::dict d;
            for (const Column& col : t.cols) {
                py::list vals;
                for (size_t i = 0; i < col.size(); ++i) {
                    if (!col.valid[i]) {
                        vals.append(py::none());
                        continue;
                    }
                    switch (col.type) {
                        case ColType::F64: vals.append(col.f64[i]); break;
                        case ColType::I64: vals.append(col.i64[i]); break;
                        case ColType::Str: vals.append(col.str[i]); break;
                        case ColType::Boolean: vals.append(static_cast<bool>(col.boolean[i])); break;
                    }
                }
                d[py::str(col.name)] = std::move(vals);
            }
            return d;
        },
        py::arg("store_dir"), py::arg("name"),
        "Read one store table as {column: [values, None for nulls]}.");

    // ---- time and solar helpers ---------------------------------------------
    m.def(
        "parse_time",
        [](const std::string& text) {
            timeutil::CivilTime ct;
            if (!timeutil::parse_civil(text, ct))
                throw Error("ParseError", "unparseable timestamp: " + text);
            return timeutil::to_epoch(ct);
        },
        py::arg("text"), "ISO-8601 UTC text to epoch seconds.");
    m.def("format_time", &timeutil::format_utc, py::arg("epoch_seconds"),
          "Epoch seconds to ISO-8601 UTC text.");
    m.def(
        "solar_position",
        [](double latitude, double longitude, int64_t t_utc) {
            const SolarPosition p = solar_position(latitude, longitude, t_utc);
            py::dict d;
            d["altitude"] = p.altitude;
            d["azimuth"] = p.azimuth;
            d["clear_sky_radiation"] = p.clear_sky_radiation;
            return d;
        },
        py::arg("latitude"), py::arg("longitude"), py::arg("t_utc"),
        "Sun altitude/azimuth (degrees) and clear-sky radiation (W/m^2).");

    // ---- feature store -------------------------------------------------------
    py::class_<PyFeatureStore>(m, "FeatureStore",
                               "An opened offline store with a registered feature registry.")
        .def(py::init<const std::string&, const std::string&>(), py::arg("store_dir"),
             py::arg("registry_file"))
        .def(
            "views",
            [](const PyFeatureStore& fs) {
                py::list out;
                for (const FeatureView& v : fs.registry().views()) {
                    py::dict d;
                    d["name"] = v.name;
                    d["entity"] = v.entity;
                    d["source"] = v.source;
                    d["ttl_seconds"] = v.ttl_seconds;
                    py::list feats;
                    for (const FeatureSpec& f : v.features) feats.append(f.name);
                    d["features"] = std::move(feats);
                    out.append(std::move(d));
                }
                return out;
            },
            "Registered views with their entity, source, TTL and features.")
        .def(
            "feature_names",
            [](const PyFeatureStore& fs) {
                std::vector<std::string> names;
                for (const FeatureView& v : fs.registry().views())
                    for (const FeatureSpec& f : v.features) names.push_back(f.name);
                return names;
            },
            "Every registered feature, in registration order.")
        .def("entities", [](const PyFeatureStore& fs) { return all_entities(fs.store()); },
             "All household ids in the metadata table.")
        .def("time_range", [](const PyFeatureStore& fs) { return consumption_range(fs.store()); },
             "(min, max) timestamp of the consumption table, epoch seconds.")
        .def(
            "get",
            [](const PyFeatureStore& fs, std::vector<std::string> entities, OptTime t0, OptTime t1,
               std::vector<std::string> features) {
                if (entities.empty()) entities = all_entities(fs.store());
                int64_t lo, hi;
                if (!t0 && !t1) {
                    std::tie(lo, hi) = consumption_range(fs.store());
                } else {
                    lo = t0.value_or(0);
                    hi = t1.value_or(std::numeric_limits<int64_t>::max());
                }
                if (features.empty())
                    for (const FeatureView& v : fs.registry().views())
                        for (const FeatureSpec& f : v.features) features.push_back(f.name);
                return matrix_to_dict(fs.registry().get_subset(entities, lo, hi, features));
            },
            py::arg("entities") = std::vector<std::string>{}, py::arg("t0") = py::none(),
            py::arg("t1") = py::none(), py::arg("features") = std::vector<std::string>{},
            "Point-in-time feature retrieval; values carry NaN where masked.");

    // ---- model ---------------------------------------------------------------
    py::class_<GbrtModel>(m, "Model", "A fitted gradient-boosted regression tree ensemble.")
        .def_property_readonly("feature_names",
                               [](const GbrtModel& g) { return g.feature_names; })
        .def_property_readonly("n_trees", [](const GbrtModel& g) { return g.trees.size(); })
        .def_property_readonly("base_score", [](const GbrtModel& g) { return g.base_score; })
        .def("to_text", [](const GbrtModel& g) { return g.to_text(); },
             "Serialize to the line-oriented text format.")
        .def_static(
            "from_text", [](const std::string& text) { return GbrtModel::from_text(text); },
            py::arg("text"), "Parse a model produced by to_text (or the train command).")
        .def(
            "importance",
            [](const GbrtModel& g, const std::string& kind) {
                if (kind == "split_count") return importance(g, ImportanceKind::SplitCount);
                if (kind == "total_gain") return importance(g, ImportanceKind::TotalGain);
                throw Error("InvalidArgument", "kind must be split_count or total_gain");
            },
            py::arg("kind") = "split_count",
            "Descending (feature, score) pairs; zero-importance features omitted.")
        .def(
            "predict",
            [](const GbrtModel& g, const PyFeatureStore& fs, std::vector<std::string> entities,
               OptTime t0, OptTime t1) {
                const TrainingMatrix full =
                    experiment_matrix(fs.registry(), make_options(entities, t0, t1, 1));
                const TrainingMatrix x = select_columns(full, g.feature_names);
                const std::vector<double> preds = predict(g, x);
                const auto rows = static_cast<py::ssize_t>(x.n_rows());
                py::array_t<double> out(rows);
                py::array_t<int64_t> ts(rows);
                auto o = out.mutable_unchecked<1>();
                auto t = ts.mutable_unchecked<1>();
                py::list ids;
                for (py::ssize_t r = 0; r < rows; ++r) {
                    ids.append(x.row_entities[r].value);
                    t(r) = x.row_timestamps[r];
                    o(r) = preds[r];
                }
                py::dict d;
                d["ids"] = std::move(ids);
                d["timestamps"] = std::move(ts);
                d["predictions"] = std::move(out);
                return d;
            },
            py::arg("store"), py::arg("entities") = std::vector<std::string>{},
            py::arg("t0") = py::none(), py::arg("t1") = py::none(),
            "Score the registered features of a store subset with this model.");

    m.def(
        "train",
        [](const PyFeatureStore& fs, int horizon, int rounds, int depth, double learning_rate,
           int min_leaf, double subsample, uint64_t seed, const std::vector<std::string>& entities,
           OptTime t0, OptTime t1) {
            SupervisedData sup;
            const TrainingMatrix packed = supervised_matrix(fs, entities, t0, t1, horizon, sup);
            return fit(packed, "__target__",
                       make_params(rounds, depth, learning_rate, min_leaf, subsample, seed));
        },
        py::arg("store"), py::arg("horizon") = 1, py::arg("rounds") = 200, py::arg("depth") = 6,
        py::arg("learning_rate") = 0.1, py::arg("min_leaf") = 20, py::arg("subsample") = 1.0,
        py::arg("seed") = 0, py::arg("entities") = std::vector<std::string>{},
        py::arg("t0") = py::none(), py::arg("t1") = py::none(),
        "Fit the forecaster on hour-ahead supervised pairs built from the store.");

    m.def(
        "cross_validate",
        [](const PyFeatureStore& fs, int horizon, int folds, int repeats, uint64_t seed,
           int rounds, int depth, double learning_rate, int min_leaf, double subsample,
           const std::vector<std::string>& entities, OptTime t0, OptTime t1) {
            SupervisedData sup;
            supervised_matrix(fs, entities, t0, t1, horizon, sup);
            CvPlan plan;
            plan.k = folds;
            plan.repeats = repeats;
            plan.seed = seed;
            return metrics_to_dict(
                cross_validate(sup.features, sup.target,
                               make_params(rounds, depth, learning_rate, min_leaf, subsample, seed),
                               plan));
        },
        py::arg("store"), py::arg("horizon") = 1, py::arg("folds") = 10, py::arg("repeats") = 10,
        py::arg("seed") = 0, py::arg("rounds") = 200, py::arg("depth") = 6,
        py::arg("learning_rate") = 0.1, py::arg("min_leaf") = 20, py::arg("subsample") = 1.0,
        py::arg("entities") = std::vector<std::string>{}, py::arg("t0") = py::none(),
        py::arg("t1") = py::none(), "Repeated k-fold cross-validation over the full feature set.");

    m.def(
        "ablation",
        [](const PyFeatureStore& fs, int horizon, int folds, int repeats, uint64_t seed,
           int rounds, int depth, double learning_rate, int min_leaf, double subsample,
           const std::vector<std::string>& entities, OptTime t0, OptTime t1) {
            CvPlan plan;
            plan.k = folds;
            plan.repeats = repeats;
            plan.seed = seed;
            const auto rows = ablation(
                fs.registry(), make_options(entities, t0, t1, horizon),
                make_params(rounds, depth, learning_rate, min_leaf, subsample, seed), plan);
            py::list out;
            for (const AblationRow& r : rows) {
                py::dict d;
                d["feature_set"] = r.feature_set_label;
                d["n_features"] = r.n_features;
                d["mse"] = r.mse;
                d["mae"] = r.mae;
                d["med_ae"] = r.med_ae;
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("store"), py::arg("horizon") = 1, py::arg("folds") = 10, py::arg("repeats") = 10,
        py::arg("seed") = 0, py::arg("rounds") = 200, py::arg("depth") = 6,
        py::arg("learning_rate") = 0.1, py::arg("min_leaf") = 20, py::arg("subsample") = 1.0,
        py::arg("entities") = std::vector<std::string>{}, py::arg("t0") = py::none(),
        py::arg("t1") = py::none(),
        "Cumulative feature-set ablation: one cross-validation per stage.");

    m.def(
        "benchmark",
        [](const std::string& store_dir, const std::string& registry_file, int repetitions,
           int threads, const std::string& raw_dir, const std::vector<std::string>& entities,
           OptTime t0, OptTime t1) {
            BenchConfig cfg;
            cfg.store_dir = store_dir;
            cfg.registry_file = registry_file;
            cfg.raw_dir = raw_dir;
            cfg.repetitions = repetitions;
            cfg.threads = threads;
            cfg.query.entity_ids = entities;
            cfg.query.all_entities = entities.empty();
            if (!t0 && !t1) {
                cfg.query.full_range = true;
            } else {
                cfg.query.t0 = t0.value_or(0);
                cfg.query.t1 = t1.value_or(std::numeric_limits<int64_t>::max());
            }
            const BenchReport report = run_benchmark(cfg);
            py::list runs, medians;
            for (const BenchTimings& t : report.runs) runs.append(timings_to_dict(t));
            for (const BenchTimings& t : report.medians()) medians.append(timings_to_dict(t));
            py::dict d;
            d["runs"] = std::move(runs);
            d["medians"] = std::move(medians);
            d["environment"] = report.environment;
            d["repetitions"] = report.repetitions;
            return d;
        },
        py::arg("store_dir"), py::arg("registry_file"), py::arg("repetitions") = 3,
        py::arg("threads") = 4, py::arg("raw_dir") = "",
        py::arg("entities") = std::vector<std::string>{}, py::arg("t0") = py::none(),
        py::arg("t1") = py::none(),
        "Time the eager, partitioned and lazy strategies over identical inputs.");
}
