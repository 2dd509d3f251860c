#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "featstore/core.hpp"
#include "featstore/gbrt.hpp"
#include "featstore/registry.hpp"

namespace featstore {

// ==== supervised dataset ====================================================

struct SupervisedData {
    TrainingMatrix features;     // target column removed
    std::vector<double> target;  // energy at t + horizon, same row order
};

// Pairs each row (entity, t) with the energy value at (entity, t + horizon);
// rows without a record exactly `horizon` hours later are dropped, so the
// last row of every entity never survives. The energy column itself stays in
// the features (the current hour's reading is a legal predictor; only the
// future value is the label).
SupervisedData build_supervised(const TrainingMatrix& matrix, int horizon_hours = 1);

// ==== metrics ===============================================================

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    double med_ae = 0.0;  // even-length median = midpoint average
};

Metrics metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// ==== cross-validation ======================================================

struct CvPlan {
    int k = 10;
    int repeats = 10;
    uint64_t seed = 0;
};

// The test-fold partition used by cross_validate: for repeat r, row indices
// are shuffled with seed + r and dealt into k folds differing in size by at
// most one. Returns repeats * k index lists in (repeat, fold) order.
std::vector<std::vector<uint32_t>> cv_test_folds(size_t n_rows, int k, int repeats,
                                                 uint64_t seed);

// For each repeat r: shuffle row indices with seed + r, deal them into k
// folds differing in size by at most one, train on k-1 folds and score the
// held-out one. Reported metrics are the mean over all k * repeats folds.
// Folds run in parallel; aggregation follows fixed fold order.
MetricsReport cross_validate(const TrainingMatrix& features, const std::vector<double>& target,
                             const GbrtParams& params, const CvPlan& plan);

// ==== ablation ==============================================================

struct AblationRow {
    std::string feature_set_label;  // "raw", "+statistical", ...
    double mse = 0.0;
    double mae = 0.0;
    double med_ae = 0.0;
    int n_features = 0;
};

// The seven cumulative feature sets, in fixed report order. Each entry maps
// the row label to the catalog subcategory it adds.
const std::vector<std::pair<std::string, std::string>>& ablation_stages();

// Column names added by each cumulative stage, resolved from the catalog and
// filtered to columns actually present in `available` (categoric columns may
// expand or be missing depending on the registry).
std::vector<std::vector<std::string>> ablation_feature_sets(
    const FeatureCatalog& catalog, const std::vector<std::string>& available);

struct AblationOptions {
    std::vector<std::string> entity_ids;  // empty = all metadata entities
    int64_t t0 = 0;
    int64_t t1 = 0;
    int horizon_hours = 1;
};

// One cross_validate per cumulative feature set over the same supervised
// rows and the same CvPlan.
std::vector<AblationRow> ablation(const Registry& registry, const AblationOptions& options,
                                  const GbrtParams& params, const CvPlan& plan);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_text(const std::vector<AblationRow>& rows);

// ==== importance report =====================================================

struct ImportanceReport {
    std::vector<std::pair<std::string, double>> scores;  // descending, no zeros
    GbrtModel model;
};

ImportanceReport importance_report(const Registry& registry, const AblationOptions& options,
                                   const GbrtParams& params, ImportanceKind kind);

std::string importance_csv(const ImportanceReport& report);

// ==== helpers shared with the CLI ===========================================

// Copies the named columns (in the given order) into a new matrix.
TrainingMatrix select_columns(const TrainingMatrix& matrix,
                              const std::vector<std::string>& columns);

// All entity ids present in the metadata table, in table order.
std::vector<std::string> all_entities(const OfflineStore& store);

// Full [min, max] timestamp range of the consumption table.
std::pair<int64_t, int64_t> consumption_range(const OfflineStore& store);

// Materializes the full feature matrix the experiments run on: get_subset
// over every registered feature for the requested entities and range.
TrainingMatrix experiment_matrix(const Registry& registry, const AblationOptions& options);

}  // namespace featstore
