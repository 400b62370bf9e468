#pragma once

#include <filesystem>

#include "lidx/core/types.hpp"

namespace lidx {

// Binary key file: little-endian u64 count, then `count` little-endian u64
// keys. This is the SOSD layout, so real SOSD files load unchanged.

/// Reads a key file, sorting and deduplicating its keys.
/// Throws DatasetError on I/O failure, length mismatch or an empty dataset.
Dataset load_dataset(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace lidx
