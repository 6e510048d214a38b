#pragma once

#include <string>

#include "satin/tensor.hpp"

namespace satin {

// Reads a PNG or JPEG file (chosen by extension) into a (3,H,W) tensor with
// values in [0,1]. Grayscale and alpha inputs are expanded/dropped.
Tensor load_image(const std::string& path);

// Writes a (3,H,W) tensor in [0,1] as an 8-bit RGB PNG.
void save_png(const std::string& path, const Tensor& img);

}  // namespace satin
