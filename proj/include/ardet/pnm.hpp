#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ardet {

struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major, 3 bytes per pixel
};

// Binary P6, maxval 255.
void write_ppm(const std::filesystem::path& path, const PpmImage& img);
PpmImage read_ppm(const std::filesystem::path& path);

}  // namespace ardet
