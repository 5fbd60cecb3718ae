#include "ardet/pnm.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace ardet {

void write_ppm(const std::filesystem::path& path, const PpmImage& img) {
  if (img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("ppm pixel buffer does not match the stated extent");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

PpmImage read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P6") throw std::runtime_error(path.string() + " is not a binary P6 pixmap");
  int w = 0, h = 0, maxval = 0;
  is >> w >> h >> maxval;
  if (!is || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported ppm header in " + path.string());
  is.get();  // single whitespace after maxval
  PpmImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!is) throw std::runtime_error("truncated pixel data in " + path.string());
  return img;
}

}  // namespace ardet
