#pragma once

#include <filesystem>

#include "wkm/phantom.hpp"

namespace wkm {

// MRC2014 subset: mode 2 (float32), cubic, little-endian, standard axis order
// (columns = x, rows = y, sections = z, z slowest).

/// Reads a cubic mode-2 map and shifts densities so the minimum is 0.
Volume load_mrc(const std::filesystem::path& path);

/// Writes `volume` as a mode-2 map with a 1 Angstrom voxel.
void write_mrc(const std::filesystem::path& path, const Volume& volume);

}  // namespace wkm
