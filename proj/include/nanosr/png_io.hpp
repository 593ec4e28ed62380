#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nanosr {

// Interleaved row-major 8-bit image.
struct ImageU8 {
    int h = 0, w = 0, channels = 0;
    std::vector<uint8_t> pix;
};

// Reads an 8-bit truecolor (RGB) PNG. Grayscale/palette/alpha/interlaced
// files are rejected with a descriptive error.
ImageU8 png_read(const std::string& path);

// Writes an 8-bit PNG; channels must be 1 (gray) or 3 (RGB).
void png_write(const std::string& path, const ImageU8& img);

// (h, w) from the header only; cheap existence/shape probe.
std::pair<int, int> png_dims(const std::string& path);

}  // namespace nanosr
