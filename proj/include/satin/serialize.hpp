#pragma once

#include <string>

#include "satin/nn.hpp"

namespace satin {

// Flat binary parameter container. Layout:
//   magic "SATINW1"
//   repeated records until EOF:
//     u32 LE  name length
//     bytes   UTF-8 name
//     u32 LE  rank
//     u64 LE  extents[rank]
//     f32 LE  data[product(extents)]
// Values are stored as float32; loading widens back to float64. A
// save/load/save cycle is bit-identical.
void save_params(const std::string& path, const ParamStore& store);

// Loads into an existing store; every record must match a registered
// parameter (by name and shape) and every parameter must be present.
void load_params(const std::string& path, ParamStore& store);

}  // namespace satin
