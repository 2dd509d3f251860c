#include "featstore/cli.hpp"

#include <glob.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "featstore/bench.hpp"
#include "featstore/core.hpp"
#include "featstore/errors.hpp"
#include "featstore/features.hpp"
#include "featstore/eval.hpp"
#include "featstore/gbrt.hpp"
#include "featstore/ingest.hpp"
#include "featstore/parquet.hpp"
#include "featstore/registry.hpp"
#include "featstore/store.hpp"
#include "featstore/timeutil.hpp"
#include "featstore/version.hpp"

namespace featstore {

namespace {

// ==== configuration =========================================================

// One key=value per line; '#' comments and blank lines ignored.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open config file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error("ConfigError",
                        path + ":" + std::to_string(lineno) + ": expected key=value");
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

// Resolves each setting as: command-line flag, else config-file key, else
// default; and records the effective value for the artifact header hash.
class Settings {
  public:
    void load(const std::string& config_path) {
        if (!config_path.empty()) config_ = read_config_file(config_path);
    }

    static bool flag_given(const CLI::App* cmd, const std::string& flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    }

    std::string str(const CLI::App* cmd, const std::string& flag, const std::string& key,
                    const std::string& flag_value, std::string def = "") {
        std::string v = std::move(def);
        if (const auto it = config_.find(key); it != config_.end()) v = it->second;
        if (flag_given(cmd, flag)) v = flag_value;
        resolved_[key] = v;
        return v;
    }

    template <typename T>
    T num(const CLI::App* cmd, const std::string& flag, const std::string& key, T flag_value,
          T def) {
        T v = def;
        if (const auto it = config_.find(key); it != config_.end()) {
            std::istringstream ss(it->second);
            if (!(ss >> v))
                throw Error("ConfigError", "config key " + key + " is not a number: " + it->second);
        }
        if (flag_given(cmd, flag)) v = flag_value;
        resolved_[key] = format_number(v);
        return v;
    }

    void note(const std::string& key, const std::string& value) { resolved_[key] = value; }

    // "# featstore <version> seed=<seed> config=<hash>" over the resolved
    // settings, so identical configurations stamp identical headers.
    std::string header(uint64_t seed) const {
        std::string canon;
        for (const auto& [k, v] : resolved_) canon += k + "=" + v + "\n";
        uint64_t h = 1469598103934665603ULL;
        for (const unsigned char c : canon) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
        return std::string("# featstore ") + FEATSTORE_VERSION + " seed=" + std::to_string(seed) +
               " config=" + hex + "\n";
    }

  private:
    template <typename T>
    static std::string format_number(T v) {
        if constexpr (std::is_floating_point_v<T>)
            return format_double(static_cast<double>(v));
        else
            return std::to_string(v);
    }

    std::map<std::string, std::string> config_;
    std::map<std::string, std::string> resolved_;
};

// ==== small helpers =========================================================

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
    if (out.empty()) out.push_back(pattern);  // let ingestion report the miss
    return out;
}

int64_t parse_instant(const std::string& text) {
    timeutil::CivilTime ct;
    if (!timeutil::parse_civil(text, ct))
        throw Error("ParseError", "unparseable timestamp: '" + text + "' (use ISO-8601, UTC)");
    return timeutil::to_epoch(ct);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void apply_holiday_file(const std::string& holiday_file) {
    if (!holiday_file.empty()) feature_config().holidays = load_holidays(holiday_file);
}

// Entity/time selection shared by get, bench, train, predict, ablate and
// importance; missing pieces fall back to "everything".
struct Selection {
    std::vector<std::string> entities;  // empty = all
    std::string from, to;               // empty = full range
    int64_t t0 = 0, t1 = 0;

    void resolve_range() {
        if (!from.empty()) t0 = parse_instant(from);
        if (!to.empty()) t1 = parse_instant(to);
    }
    AblationOptions options(int horizon = 1) const {
        AblationOptions opt;
        opt.entity_ids = entities;
        opt.t0 = t0;
        opt.t1 = t1;
        if (from.empty() && to.empty()) {
            opt.t0 = 0;
            opt.t1 = 0;  // experiment_matrix treats 0/0 as the full span
        } else if (to.empty()) {
            opt.t1 = std::numeric_limits<int64_t>::max();
        }
        opt.horizon_hours = horizon;
        return opt;
    }
};

void add_selection(CLI::App* cmd, Selection& sel, std::string& entities_flag) {
    cmd->add_option("--entities", entities_flag, "comma-separated household ids (default: all)");
    cmd->add_option("--from", sel.from, "start of the time range, ISO-8601 UTC (inclusive)");
    cmd->add_option("--to", sel.to, "end of the time range, ISO-8601 UTC (inclusive)");
}

// The GBRT hyperparameter flags shared by train, ablate and importance.
struct ParamFlags {
    GbrtParams params;
    void add(CLI::App* cmd) {
        cmd->add_option("--rounds", params.n_rounds, "boosting rounds");
        cmd->add_option("--depth", params.max_depth, "maximum tree depth");
        cmd->add_option("--learning-rate", params.learning_rate, "shrinkage in (0,1]");
        cmd->add_option("--min-leaf", params.min_samples_leaf, "minimum rows per leaf");
        cmd->add_option("--subsample", params.subsample, "row fraction per round in (0,1]");
    }
    void note(Settings& s) const {
        s.note("rounds", std::to_string(params.n_rounds));
        s.note("depth", std::to_string(params.max_depth));
        s.note("learning_rate", format_double(params.learning_rate));
        s.note("min_leaf", std::to_string(params.min_samples_leaf));
        s.note("subsample", format_double(params.subsample));
    }
};

TrainingMatrix pack_with_target(const SupervisedData& sup, const std::string& target_name) {
    TrainingMatrix packed;
    packed.columns = sup.features.columns;
    packed.columns.push_back(target_name);
    packed.row_entities = sup.features.row_entities;
    packed.row_timestamps = sup.features.row_timestamps;
    const size_t w = sup.features.n_cols();
    packed.data.reserve(sup.features.n_rows() * (w + 1));
    packed.missing.reserve(sup.features.n_rows() * (w + 1));
    for (size_t r = 0; r < sup.features.n_rows(); ++r) {
        packed.data.insert(packed.data.end(), sup.features.data.begin() + r * w,
                           sup.features.data.begin() + (r + 1) * w);
        packed.data.push_back(sup.target[r]);
        packed.missing.insert(packed.missing.end(), sup.features.missing.begin() + r * w,
                              sup.features.missing.begin() + (r + 1) * w);
        packed.missing.push_back(0);
    }
    return packed;
}

// get output: id, timestamp, values (missing cells empty), then a 0/1
// indicator column per feature.
std::string matrix_csv(const TrainingMatrix& m) {
    std::string out = "residential_id,timestamp";
    for (const auto& c : m.columns) out += "," + c;
    for (const auto& c : m.columns) out += ",__missing__:" + c;
    out += "\n";
    for (size_t r = 0; r < m.n_rows(); ++r) {
        out += m.row_entities[r].value + "," + timeutil::format_utc(m.row_timestamps[r]);
        for (size_t c = 0; c < m.n_cols(); ++c)
            out += "," + (m.is_missing(r, c) ? std::string() : format_double(m.at(r, c)));
        for (size_t c = 0; c < m.n_cols(); ++c)
            out += m.is_missing(r, c) ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file_atomic(out_path, text);
}

void prepend_header(const std::string& path, const std::string& header) {
    write_file_atomic(path, header + read_file(path));
}

std::vector<std::string> registered_features(const Registry& reg) {
    std::vector<std::string> names;
    for (const FeatureView& v : reg.views())
        for (const FeatureSpec& f : v.features) names.push_back(f.name);
    return names;
}

}  // namespace

// ==== dispatch ==============================================================

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"featstore: declarative feature management for household energy ML"};
    app.set_version_flag("--version", std::string("featstore ") + FEATSTORE_VERSION);
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    auto settings = std::make_shared<Settings>();

    // Shared flag storage; each subcommand binds the subset it uses.
    struct Shared {
        std::string config, store, registry, out, raw, holiday_file, region;
        std::string entities_flag, features_flag, kind = "split_count", model;
        Selection sel;
        ParamFlags gbrt;
        uint64_t seed = 0;
        int threads = 4, reps = 3, horizon = 1, folds = 10, repeats = 10;
        int households = 0, days = 0;
        std::vector<std::string> consumption;
        std::string weather, metadata;
    };
    auto o = std::make_shared<Shared>();

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o->config, "key=value configuration file");
        cmd->add_option("--store", o->store, "offline store directory");
        cmd->add_option("--registry", o->registry, "feature view declaration file");
        cmd->add_option("--seed", o->seed, "seed stamped into artifacts and experiments");
        cmd->add_option("--holiday-file", o->holiday_file, "holiday calendar override");
        cmd->add_option("--region", o->region, "holiday region label (default bc)");
    };

    // Resolves common settings (flags > config > defaults) for a command.
    struct Common {
        std::string store, registry, holiday_file, region;
        uint64_t seed = 0;
        int threads = 4;
    };
    auto resolve_common = [&](const CLI::App* cmd) {
        settings->load(o->config);
        Common c;
        c.store = settings->str(cmd, "--store", "store_dir", o->store);
        c.registry = settings->str(cmd, "--registry", "registry_file", o->registry);
        c.seed = settings->num<uint64_t>(cmd, "--seed", "seed", o->seed, 0);
        c.threads = settings->num<int>(cmd, "--threads", "threads", o->threads, 4);
        c.region = settings->str(cmd, "--region", "region", o->region, "bc");
        c.holiday_file = settings->str(cmd, "--holiday-file", "holiday_file", o->holiday_file);
        apply_holiday_file(c.holiday_file);
        return c;
    };
    auto require = [](const std::string& value, const char* what) {
        if (value.empty())
            throw CLI::RequiredError(std::string("--") + what);
        return value;
    };

    // ---- synth -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("synth", "generate a synthetic raw corpus");
        add_common(cmd);
        cmd->add_option("--households", o->households, "number of households")->required();
        cmd->add_option("--days", o->days, "days of hourly data")->required();
        cmd->add_option("--out", o->out, "output directory")->required();
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "synth");
            settings->note("households", std::to_string(o->households));
            settings->note("days", std::to_string(o->days));
            settings->note("out", o->out);
            const SynthFiles files =
                generate_synthetic(o->households, o->days, c.seed, o->out);
            const std::string header = settings->header(c.seed);
            for (const std::string& path : {files.consumption, files.weather, files.metadata})
                prepend_header(path, header);
            std::printf("wrote %s\n      %s\n      %s\n", files.consumption.c_str(),
                        files.weather.c_str(), files.metadata.c_str());
        });
    }

    // ---- ingest ------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ingest", "clean raw CSVs into the offline store");
        add_common(cmd);
        cmd->add_option("--consumption", o->consumption,
                        "consumption CSV path or glob (repeatable)");
        cmd->add_option("--weather", o->weather, "weather CSV");
        cmd->add_option("--metadata", o->metadata, "metadata CSV");
        cmd->add_option("--out", o->out, "store directory")->required();
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "ingest");
            if (o->consumption.empty() && o->weather.empty() && o->metadata.empty())
                throw Error("EmptyInput", "nothing to ingest: give --consumption/--weather/--metadata");

            // Reuse an existing store so tables accumulate across ingests.
            OfflineStore store = [&] {
                try {
                    return OfflineStore::open(o->out);
                } catch (const Error&) {
                    return OfflineStore::create(o->out);
                }
            }();
            const auto zone = timeutil::pacific_time();
            auto print = [](const char* table, const StorageStats& s) {
                std::printf("%s: %lld rows in, %lld kept (%lld duplicate, %lld invalid) in %.3fs\n",
                            table, static_cast<long long>(s.rows_in),
                            static_cast<long long>(s.rows_out),
                            static_cast<long long>(s.rows_dropped_duplicate),
                            static_cast<long long>(s.rows_dropped_invalid), s.elapsed);
            };
            if (!o->consumption.empty()) {
                std::vector<std::string> paths;
                for (const auto& pattern : o->consumption)
                    for (auto& p : expand_glob(pattern)) paths.push_back(std::move(p));
                print("consumption", ingest_consumption(store, paths, zone));
            }
            if (!o->weather.empty()) print("weather", ingest_weather(store, o->weather, zone));
            if (!o->metadata.empty()) print("metadata", ingest_metadata(store, o->metadata));
            (void)c;
        });
    }

    // ---- register ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("register", "validate and register feature views");
        add_common(cmd);
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const int64_t opens_before = parquet::file_open_count();
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);
            const int64_t opens = parquet::file_open_count() - opens_before;
            size_t n_features = 0;
            for (const FeatureView& v : reg.views()) {
                std::printf("view %-28s entity=%s source=%s ttl=%llds (%zu features)\n",
                            v.name.c_str(), v.entity.c_str(), v.source.c_str(),
                            static_cast<long long>(v.ttl_seconds), v.features.size());
                n_features += v.features.size();
            }
            std::printf("registered %zu views, %zu features; source files opened: %lld\n",
                        reg.views().size(), n_features, static_cast<long long>(opens));
        });
    }

    // ---- get ---------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("get", "point-in-time feature retrieval as CSV");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        cmd->add_option("--features", o->features_flag,
                        "comma-separated names or view:feature (default: all registered)");
        cmd->add_option("--out", o->out, "output CSV (default: stdout)");
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "get");
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);
            settings->note("features", o->features_flag);

            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);

            o->sel.entities = split_commas(o->entities_flag);
            o->sel.resolve_range();
            std::vector<std::string> ids = o->sel.entities;
            if (ids.empty()) ids = all_entities(store);
            int64_t t0 = o->sel.t0, t1 = o->sel.t1;
            if (o->sel.from.empty() && o->sel.to.empty())
                std::tie(t0, t1) = consumption_range(store);
            else if (o->sel.to.empty())
                t1 = std::numeric_limits<int64_t>::max();

            std::vector<std::string> features = split_commas(o->features_flag);
            if (features.empty()) features = registered_features(reg);

            const TrainingMatrix m = reg.get_subset(ids, t0, t1, features);
            emit(o->out, settings->header(c.seed) + matrix_csv(m));
            if (!o->out.empty())
                std::printf("wrote %s (%zu rows x %zu features)\n", o->out.c_str(), m.n_rows(),
                            m.n_cols());
        });
    }

    // ---- bench -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("bench", "time the three pipeline strategies");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        cmd->add_option("--reps", o->reps, "repetitions per strategy (>= 3)");
        cmd->add_option("--threads", o->threads, "partitioned worker count");
        cmd->add_option("--raw", o->raw, "raw corpus dir; when set, t_process times ingestion");
        cmd->add_option("--out", o->out, "report CSV path");
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "bench");
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);
            settings->note("reps", std::to_string(o->reps));

            BenchConfig cfg;
            cfg.store_dir = require(c.store, "store");
            cfg.registry_file = require(c.registry, "registry");
            cfg.raw_dir = o->raw;
            cfg.repetitions = o->reps;
            cfg.threads = c.threads;
            cfg.query.entity_ids = split_commas(o->entities_flag);
            cfg.query.all_entities = cfg.query.entity_ids.empty();
            o->sel.resolve_range();
            cfg.query.t0 = o->sel.t0;
            cfg.query.t1 = o->sel.t1;
            cfg.query.full_range = o->sel.from.empty() && o->sel.to.empty();
            if (!cfg.query.full_range && o->sel.to.empty())
                cfg.query.t1 = std::numeric_limits<int64_t>::max();

            const BenchReport report = run_benchmark(cfg);
            std::printf("%s", bench_report_text(report).c_str());
            if (!o->out.empty()) {
                emit(o->out, settings->header(c.seed) + bench_report_csv(report));
                std::printf("wrote %s\n", o->out.c_str());
            }
        });
    }

    // ---- train -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("train", "fit the boosted-tree forecaster");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        o->gbrt.add(cmd);
        cmd->add_option("--horizon", o->horizon, "forecast horizon in hours");
        cmd->add_option("--out", o->out, "model file")->required();
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "train");
            o->gbrt.note(*settings);
            settings->note("horizon", std::to_string(o->horizon));
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);

            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);
            o->sel.entities = split_commas(o->entities_flag);
            o->sel.resolve_range();

            const TrainingMatrix full = experiment_matrix(reg, o->sel.options(o->horizon));
            const SupervisedData sup = build_supervised(full, o->horizon);
            GbrtParams params = o->gbrt.params;
            params.seed = c.seed;
            const GbrtModel model = fit(pack_with_target(sup, "__target__"), "__target__", params);
            const Metrics train = metrics(sup.target, predict(model, sup.features));
            std::printf(
                "trained %zu trees on %zu rows x %zu features; train mse=%.6f mae=%.6f medae=%.6f\n",
                model.trees.size(), sup.features.n_rows(), sup.features.n_cols(), train.mse,
                train.mae, train.med_ae);
            emit(o->out, settings->header(c.seed) + model.to_text());
            std::printf("wrote %s\n", o->out.c_str());
        });
    }

    // ---- predict -----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("predict", "score a trained model over a subset");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        cmd->add_option("--model", o->model, "model file from train")->required();
        cmd->add_option("--out", o->out, "predictions CSV (default: stdout)");
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "predict");
            settings->note("model", o->model);
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);

            const GbrtModel model = GbrtModel::from_text(read_file(o->model));
            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);
            o->sel.entities = split_commas(o->entities_flag);
            o->sel.resolve_range();

            const TrainingMatrix full = experiment_matrix(reg, o->sel.options());
            const TrainingMatrix x = select_columns(full, model.feature_names);
            const std::vector<double> preds = predict(model, x);

            std::string csv = "residential_id,timestamp,prediction\n";
            for (size_t r = 0; r < x.n_rows(); ++r)
                csv += x.row_entities[r].value + "," + timeutil::format_utc(x.row_timestamps[r]) +
                       "," + format_double(preds[r]) + "\n";
            emit(o->out, settings->header(c.seed) + csv);
            if (!o->out.empty())
                std::printf("wrote %s (%zu predictions)\n", o->out.c_str(), preds.size());
        });
    }

    // ---- ablate ------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ablate", "cumulative feature-set ablation");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        o->gbrt.add(cmd);
        cmd->add_option("--folds", o->folds, "cross-validation folds");
        cmd->add_option("--repeats", o->repeats, "cross-validation repeats");
        cmd->add_option("--horizon", o->horizon, "forecast horizon in hours");
        cmd->add_option("--out", o->out, "ablation table CSV")->required();
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "ablate");
            o->gbrt.note(*settings);
            settings->note("folds", std::to_string(o->folds));
            settings->note("repeats", std::to_string(o->repeats));
            settings->note("horizon", std::to_string(o->horizon));
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);

            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);
            o->sel.entities = split_commas(o->entities_flag);
            o->sel.resolve_range();

            GbrtParams params = o->gbrt.params;
            params.seed = c.seed;
            CvPlan plan;
            plan.k = o->folds;
            plan.repeats = o->repeats;
            plan.seed = c.seed;

            const auto rows = ablation(reg, o->sel.options(o->horizon), params, plan);
            std::printf("%s", ablation_text(rows).c_str());
            emit(o->out, settings->header(c.seed) + ablation_csv(rows));
            std::printf("wrote %s\n", o->out.c_str());
        });
    }

    // ---- importance --------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("importance", "feature importances of the full model");
        add_common(cmd);
        add_selection(cmd, o->sel, o->entities_flag);
        o->gbrt.add(cmd);
        cmd->add_option("--kind", o->kind, "split_count or total_gain");
        cmd->add_option("--horizon", o->horizon, "forecast horizon in hours");
        cmd->add_option("--model-out", o->model, "also save the fitted model here");
        cmd->add_option("--out", o->out, "importance CSV")->required();
        cmd->callback([=] {
            const Common c = resolve_common(cmd);
            settings->note("command", "importance");
            o->gbrt.note(*settings);
            settings->note("kind", o->kind);
            settings->note("horizon", std::to_string(o->horizon));
            settings->note("entities", o->entities_flag);
            settings->note("from", o->sel.from);
            settings->note("to", o->sel.to);

            ImportanceKind kind;
            if (o->kind == "split_count")
                kind = ImportanceKind::SplitCount;
            else if (o->kind == "total_gain")
                kind = ImportanceKind::TotalGain;
            else
                throw Error("InvalidArgument", "--kind must be split_count or total_gain");

            OfflineStore store = OfflineStore::open(require(c.store, "store"));
            const Registry reg = Registry::load(require(c.registry, "registry"), &store);
            o->sel.entities = split_commas(o->entities_flag);
            o->sel.resolve_range();

            GbrtParams params = o->gbrt.params;
            params.seed = c.seed;
            const ImportanceReport report =
                importance_report(reg, o->sel.options(o->horizon), params, kind);
            for (size_t i = 0; i < report.scores.size(); ++i)
                std::printf("%2zu. %-18s %s\n", i + 1, report.scores[i].first.c_str(),
                            format_double(report.scores[i].second).c_str());
            emit(o->out, settings->header(c.seed) + importance_csv(report));
            std::printf("wrote %s\n", o->out.c_str());
            if (!o->model.empty()) {
                emit(o->model, settings->header(c.seed) + report.model.to_text());
                std::printf("wrote %s\n", o->model.c_str());
            }
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::string what = e.what();
        const std::string prefix = "[" + e.code() + "] ";
        if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
        std::fprintf(stderr, "error[%s]: %s\n", e.code().c_str(), what.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[Internal]: %s\n", e.what());
        return 1;
    }
    return 0;
}

int dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"featstore"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace featstore
