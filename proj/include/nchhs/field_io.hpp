#pragma once

#include "nchhs/grid.hpp"

#include <string>

namespace nchhs {

enum class SnapshotFormat { binary, ascii };

/// Snapshot format: one ASCII header line "NCHHS-FIELD nx ny lx ly t" followed
/// by row-major (y outer, x inner) little-endian float64 payload, or one value
/// per line in the ASCII variant. Round trips are bit exact in both variants.
void write_field(const std::string& path, const ScalarField& f, double t,
                 SnapshotFormat format = SnapshotFormat::binary);

struct LoadedField {
    ScalarField field;
    double t = 0.0;
};

LoadedField read_field(const std::string& path, BoundaryMode mode = BoundaryMode::neumann);

/// 8-bit binary PGM with linear min/max mapping, for quick viewing.
void write_pgm(const std::string& path, const ScalarField& f);

} // namespace nchhs
