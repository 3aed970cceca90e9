#pragma once

#include "magcal/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace magcal {

/// Header `yx,yy,yz`, one sample per row, 17 significant digits.
void write_dataset_csv(std::ostream& out, const std::vector<Vec3>& samples);
void write_dataset_csv(const std::filesystem::path& path, const std::vector<Vec3>& samples);

struct CsvReadResult {
  Dataset data;
  std::vector<std::string> warnings;
};

/**
 * Reads samples from the `yx`, `yy`, `yz` columns, located by header name.
 * Other columns (timestamps, temperatures) are skipped with a warning.
 * Throws InputError on a missing column, a short row or a non-numeric value.
 */
CsvReadResult read_dataset_csv(std::istream& in);
CsvReadResult read_dataset_csv(const std::filesystem::path& path);

/// 64-bit FNV-1a of a file's bytes, as "fnv1a64:<16 hex digits>".
std::string file_digest(const std::filesystem::path& path);

}  // namespace magcal
