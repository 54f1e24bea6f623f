#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plumewatch/image.hpp"

namespace plumewatch {

// Animated GIF89a. Each frame gets its own local colour table: the exact colours
// when a frame has at most 256 of them, otherwise a fixed 3-3-2 RGB palette.
// Output is a pure function of the inputs.
std::vector<std::uint8_t> encode_gif(std::span<const Image> frames, int delay_centiseconds,
                                     bool loop_forever = true);

}  // namespace plumewatch
