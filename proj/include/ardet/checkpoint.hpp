#pragma once

#include <filesystem>

#include "ardet/params.hpp"

namespace ardet {

// Flat binary parameter container; byte layout documented in
// docs/checkpoint-format.md and stable across releases. Records are written
// in name order, so saving the same store twice is byte-identical.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);

// Loads all records into a fresh store (trainable flag from the record).
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace ardet
