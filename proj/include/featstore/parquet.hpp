#pragma once

#include <cstdint>
#include <string>

#include "featstore/table.hpp"

namespace featstore::parquet {

// Writes `table` as a Parquet file: PLAIN encoding, uncompressed, a single
// row group, every column optional. The subset is enough for this store's
// own files and for standard readers to open them.
void write_table(const std::string& path, const ColumnTable& table);

// Reads a file produced by write_table (or any flat file within the same
// subset: PLAIN data pages, uncompressed, RLE definition levels).
ColumnTable read_table(const std::string& path);

// Number of read_table calls since process start (or the last reset).
// Lets tests assert that registration paths touch no source files.
int64_t file_open_count();
void reset_file_open_count();

}  // namespace featstore::parquet
