#include "hdkit/serialize.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hdkit::io {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  using U = std::make_unsigned_t<T>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_le<std::uint32_t>(os, u);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_le<std::uint64_t>(os, u);
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw Error("truncated HDCM stream");
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, sizeof(T));
  return v;
}

float get_f32(std::istream& is) {
  std::uint32_t u = get_le<std::uint32_t>(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

double get_f64(std::istream& is) {
  std::uint64_t u = get_le<std::uint64_t>(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_hypermatrix(std::ostream& os, const Hypermatrix& m) {
  os.write("HDCM", 4);
  put_le<std::uint16_t>(os, kHdcmVersion);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(m.elem()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint8_t>(os, 1);  // seedless: payload is materialized values
  if (m.is_packed()) {
    for (std::int64_t r = 0; r < m.rows(); ++r)
      for (std::uint64_t w : m.row_words(r)) put_le<std::uint64_t>(os, w);
    return;
  }
  switch (m.elem()) {
    case ElementType::F32:
      for (float v : m.values<float>()) put_f32(os, v);
      break;
    case ElementType::F64:
      for (double v : m.values<double>()) put_f64(os, v);
      break;
    default:
      dispatch_dense(m.elem(), [&](auto tag) {
        using T = decltype(tag);
        if constexpr (std::is_integral_v<T>) {
          for (T v : m.values<T>()) put_le<T>(os, v);
        }
      });
  }
  if (!os) throw Error("write failed for HDCM stream");
}

Hypermatrix read_hypermatrix(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HDCM", 4) != 0)
    throw Error("not an HDCM stream (bad magic)");
  std::uint16_t version = get_le<std::uint16_t>(is);
  if (version != kHdcmVersion)
    throw Error("unsupported HDCM version " + std::to_string(version));
  std::uint8_t elem_raw = get_le<std::uint8_t>(is);
  if (elem_raw > static_cast<std::uint8_t>(ElementType::Bin1))
    throw Error("bad element type tag in HDCM header");
  ElementType elem = static_cast<ElementType>(elem_raw);
  std::int64_t rows = get_le<std::uint32_t>(is);
  std::int64_t dim = get_le<std::uint32_t>(is);
  (void)get_le<std::uint8_t>(is);  // seedless flag
  if (rows <= 0 || dim <= 0) throw Error("bad shape in HDCM header");

  Hypermatrix m(elem, rows, dim);
  if (m.is_packed()) {
    std::uint64_t tail = PackedBits(dim).tail_mask();
    for (std::int64_t r = 0; r < rows; ++r) {
      auto words = m.row_words(r);
      for (auto& w : words) w = get_le<std::uint64_t>(is);
      if (!words.empty() && (words.back() & ~tail) != 0)
        throw Error("nonzero padding bits in Bin1 payload");
    }
    return m;
  }
  switch (elem) {
    case ElementType::F32:
      for (float& v : m.values<float>()) v = get_f32(is);
      break;
    case ElementType::F64:
      for (double& v : m.values<double>()) v = get_f64(is);
      break;
    default:
      dispatch_dense(elem, [&](auto tag) {
        using T = decltype(tag);
        if constexpr (std::is_integral_v<T>) {
          for (T& v : m.values<T>()) v = get_le<T>(is);
        }
      });
  }
  return m;
}

void save_hypermatrix(const std::string& path, const Hypermatrix& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  write_hypermatrix(f, m);
  if (!f) throw Error("write failed: " + path);
}

Hypermatrix load_hypermatrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  return read_hypermatrix(f);
}

}  // namespace hdkit::io
