#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "featstore/store.hpp"
#include "featstore/table.hpp"
#include "featstore/timeutil.hpp"

namespace featstore {

struct StorageStats {
    int64_t rows_in = 0;
    int64_t rows_out = 0;
    int64_t rows_dropped_duplicate = 0;
    int64_t rows_dropped_invalid = 0;
    int64_t gap_hours_filled = 0;  // gaps are never imputed; stays 0
    double elapsed = 0.0;          // seconds, the "to process" time
};

// Each ingest_* reads one or more raw CSVs, cleans them, and writes the
// named table (parquet + CSV mirror) into the store. Raw local timestamps
// are converted to UTC with the given wall-clock zone; ISO instants that
// already carry a 'Z' suffix are taken as UTC unchanged, which makes the
// cleaned CSV mirrors re-ingestable.
//
// Consumption files may carry a residential_id column; files without one
// take their entity id from the file name stem.
// The eleven heating/cooling flag columns of the metadata table, in
// storage order.
const std::vector<std::string>& metadata_flags();

StorageStats ingest_consumption(OfflineStore& store, const std::vector<std::string>& paths,
                                const timeutil::WallClockZone& zone);
StorageStats ingest_weather(OfflineStore& store, const std::string& path,
                            const timeutil::WallClockZone& zone);
StorageStats ingest_metadata(OfflineStore& store, const std::string& path);

// Writes raw consumption/weather/metadata CSVs under out_dir, deterministic
// for a fixed seed. Consumption carries signal in every feature category:
// a diurnal shape, weekend/holiday offsets, temperature coupling scaled by
// the building's heating/cooling flags, and per-region level differences.
struct SynthFiles {
    std::string consumption;
    std::string weather;
    std::string metadata;
};
SynthFiles generate_synthetic(int n_households, int n_days, uint64_t seed,
                              const std::string& out_dir);

}  // namespace featstore
