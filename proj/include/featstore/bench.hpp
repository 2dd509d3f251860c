#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "featstore/core.hpp"

namespace featstore {

// Row selection shared by all three strategies. The flags make the empty
// query expressible: no ids and all_entities=false selects nothing.
struct SubsetQuery {
    std::vector<std::string> entity_ids;
    bool all_entities = false;  // every household in the metadata table
    int64_t t0 = 0;
    int64_t t1 = 0;
    bool full_range = false;  // the whole consumption span
};

struct BenchTimings {
    std::string strategy;  // "eager" | "partitioned" | "lazy"
    double t_process = 0.0;
    double t_join_enrich = 0.0;
    double t_obtain_subset = 0.0;
    int threads = 1;
    int64_t rows_joined = 0;
};

struct BenchReport {
    std::vector<BenchTimings> runs;  // every repetition, execution order
    std::string environment;
    int repetitions = 0;
    std::string aggregation = "median";

    // Per-strategy medians with the first (cache-warming) repetition of
    // each strategy discarded.
    std::vector<BenchTimings> medians() const;
};

// The 33 enriched columns every strategy produces, in the order of
// registry/energy.registry.
const std::vector<std::string>& canonical_feature_columns();

// Single-threaded full pipeline: left-join consumption x weather x metadata,
// derive every canonical feature, persist the joined table to
// <store>/intermediate_eager.parquet (t_join_enrich), then answer the query
// by re-reading and filtering that file (t_obtain_subset).
std::pair<TrainingMatrix, BenchTimings> run_eager(const std::string& store_dir,
                                                  const SubsetQuery& query);

// Same pipeline and output, but the join+enrich work is partitioned by
// entity across `threads` workers (threads >= 2) with a merge barrier
// before the file write.
std::pair<TrainingMatrix, BenchTimings> run_partitioned(const std::string& store_dir,
                                                        const SubsetQuery& query, int threads);

// Registry strategy: t_join_enrich covers registration only (no data is
// touched); t_obtain_subset covers the on-demand point-in-time retrieval.
std::pair<TrainingMatrix, BenchTimings> run_lazy(const std::string& store_dir,
                                                 const std::string& registry_file,
                                                 const SubsetQuery& query);

struct BenchConfig {
    std::string store_dir;
    std::string registry_file;
    std::string raw_dir;  // when set, t_process times a fresh ingestion once
    SubsetQuery query;
    int repetitions = 3;  // per strategy; the first is discarded from medians
    int threads = 4;      // partitioned strategy width
};

// Runs each strategy `repetitions` times, never concurrently.
BenchReport run_benchmark(const BenchConfig& config);

// One median row per strategy:
// strategy,t_process,t_join_enrich,t_obtain_subset,threads,rows_joined
std::string bench_report_csv(const BenchReport& report);
std::string bench_report_text(const BenchReport& report);

}  // namespace featstore
