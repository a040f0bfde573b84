#pragma once
/*
 * Field snapshot files.  Byte-exact layout (see docs/formats.md):
 *   bytes 0..3   magic "WEF1"
 *   bytes 4..7   uint32 little-endian: grid points per axis n
 *   bytes 8..11  uint32 little-endian: rank code (1 scalar, 3 vector, 6 sym)
 *   bytes 12..19 float64 little-endian: snapshot time t
 *   then components(rank) * n^3 float64 little-endian values, component-major,
 *   C order (x outer, z inner) per component.
 */

#include <string>

#include "wildflow/field.hpp"

namespace wf {

void write_snapshot(const std::string& path, const Field& f, double t);
Field read_snapshot(const std::string& path, double* t_out = nullptr);

}  // namespace wf
