#pragma once

#include <string>

#include "eggsep/tensor.hpp"

namespace eggsep {

// Binary P5 graymap, 8-bit, maxval 255, round-half-up quantization.
// Round-trip error is at most 1/510 per pixel. save requires a 2-D tensor
// with values in [0,1].
void save_pgm(const Tensor& t, const std::string& path);
Tensor load_pgm(const std::string& path);

}  // namespace eggsep
