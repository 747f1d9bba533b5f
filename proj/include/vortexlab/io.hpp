#pragma once

#include <string>

#include "vortexlab/field.hpp"

namespace vortexlab {

/// Field snapshot container: an 8-byte little-endian header length, a JSON
/// header (grid descriptor, epsilon, field names, value encoding "f64le"),
/// then the raw arrays in header order. Complex fields are written as the
/// interleaved (re, im) pairs they are stored as.
void write_snapshot(const FieldConfiguration& config, const std::string& path);
FieldConfiguration read_snapshot(const std::string& path);

/// Per-node CSV export (coordinates, Re u, Im u, A components) for small
/// grids; refuses grids above `max_nodes`.
void write_field_csv(const FieldConfiguration& config, const std::string& path,
                     size_t max_nodes = 1u << 22);

}  // namespace vortexlab
