#include "ardet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ardet {

namespace {

constexpr char kMagic[8] = {'A', 'R', 'D', 'T', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint truncated while reading a u32");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint truncated while reading a value");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 8);
  put_u32(os, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& [name, t] : params.entries()) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(t->requires_grad ? 1 : 0);
    put_u32(os, static_cast<std::uint32_t>(t->shape.size()));
    for (int d : t->shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t->data) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not an ARDTCKP1 checkpoint: " + path.string());
  const std::uint32_t count = get_u32(is);
  ParamStore store;
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int trainable = is.get();
    if (!is) throw std::runtime_error("checkpoint truncated in record header");
    const std::uint32_t ndim = get_u32(is);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(is));
    auto t = store.create(name, shape, trainable != 0);
    for (auto& v : t->data) v = get_f64(is);
  }
  return store;
}

}  // namespace ardet
