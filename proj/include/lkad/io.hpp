#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lkad/tensor.hpp"

namespace lkad {

// LKDT container: magic "LKDT", u32 rank, u32 extents, little-endian
// 64-bit payload. Used for checkpoints, depth maps, and golden files.

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // assumes little-endian host
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_lkdt(std::ostream& os, const Tensor& t) {
  os.write("LKDT", 4);
  detail::write_le<uint32_t>(os, static_cast<uint32_t>(t.rank()));
  for (int d = 0; d < t.rank(); ++d)
    detail::write_le<uint32_t>(os, static_cast<uint32_t>(t.extent(d)));
  for (long i = 0; i < t.numel(); ++i) detail::write_le<double>(os, t.data()[i]);
}

inline Tensor read_lkdt(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LKDT", 4) != 0)
    throw std::runtime_error("not an LKDT stream");
  uint32_t rank = detail::read_le<uint32_t>(is);
  if (rank > 16) throw std::runtime_error("LKDT: implausible rank");
  Shape shape(rank);
  for (uint32_t d = 0; d < rank; ++d)
    shape[d] = static_cast<int>(detail::read_le<uint32_t>(is));
  std::vector<real> data(shape_numel(shape));
  for (auto& v : data) v = detail::read_le<double>(is);
  if (!is) throw std::runtime_error("LKDT: truncated stream");
  return Tensor::from_data(std::move(shape), std::move(data));
}

inline void save_lkdt(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  write_lkdt(f, t);
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline Tensor load_lkdt(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return read_lkdt(f);
}

// ---------------------------------------------------------------------------
// Binary PPM (P6, 8-bit). Images map to/from [3,H,W] tensors in [0,1].

inline void save_ppm(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.extent(0) != 3)
    throw std::invalid_argument("save_ppm expects [3,H,W]");
  const int h = img.extent(1), w = img.extent(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << "P6\n" << w << " " << h << "\n255\n";
  const long plane = static_cast<long>(h) * w;
  for (long i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      double v = img.data()[c * plane + i];
      int q = static_cast<int>(v * 255.0 + 0.5);
      q = std::min(255, std::max(0, q));
      f.put(static_cast<char>(q));
    }
  if (!f) throw std::runtime_error("write failed: " + path);
}

/// Grayscale P5 writer for visualizations.
inline void save_pgm(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.extent(0) != 1)
    throw std::invalid_argument("save_pgm expects [1,H,W]");
  const int h = img.extent(1), w = img.extent(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << "P5\n" << w << " " << h << "\n255\n";
  for (long i = 0; i < static_cast<long>(h) * w; ++i) {
    int q = static_cast<int>(img.data()[i] * 255.0 + 0.5);
    f.put(static_cast<char>(std::min(255, std::max(0, q))));
  }
}

inline Tensor load_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P6") throw std::runtime_error("not a binary PPM: " + path);
  auto next_int = [&f, &path]() {
    // skip whitespace and '#' comments
    int c = f.peek();
    while (std::isspace(c) || c == '#') {
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else {
        f.get();
      }
      c = f.peek();
    }
    int v;
    if (!(f >> v)) throw std::runtime_error("bad PPM header: " + path);
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw std::runtime_error("PPM maxval must be 255: " + path);
  f.get();  // single whitespace after header
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  f.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (!f) throw std::runtime_error("truncated PPM: " + path);
  Tensor img = Tensor::zeros({3, h, w});
  const long plane = static_cast<long>(h) * w;
  for (long i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      img.data()[c * plane + i] = raw[i * 3 + c] / 255.0;
  return img;
}

}  // namespace lkad
