#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/fbm/ensemble.hpp"

namespace fracsde::fbm {

inline constexpr std::uint16_t cache_version = 1;

namespace detail {

template <class U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf.data(), buf.size());
}

inline void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }

template <class U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> buf;
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw std::runtime_error("path cache: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

inline void append_number(std::string& out, double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, r.ptr);
}

}  // namespace detail

// Layout: "FBM1", u16 version, f64 H, f64 T, u32 n_steps, u16 d, u32 n_paths, u64 seed,
// u8 generator, u64 count + dW values, then all B values; little-endian, row-major.
inline void write_cache(std::ostream& os, const FbmEnsemble& e) {
  os.write("FBM1", 4);
  detail::put_le<std::uint16_t>(os, cache_version);
  detail::put_f64(os, e.grid.H);
  detail::put_f64(os, e.grid.T);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.grid.n_steps));
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(e.d));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.n_paths));
  detail::put_le<std::uint64_t>(os, e.seed);
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(e.generator));
  detail::put_le<std::uint64_t>(os, e.dW.size());
  for (double x : e.dW) detail::put_f64(os, x);
  for (double x : e.B) detail::put_f64(os, x);
}

inline FbmEnsemble read_cache(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FBM1", 4) != 0) throw std::runtime_error("path cache: bad magic");
  const auto version = detail::get_le<std::uint16_t>(is);
  if (version != cache_version) throw std::runtime_error("path cache: unsupported version " + std::to_string(version));
  FbmEnsemble e;
  const double H = detail::get_f64(is);
  const double T = detail::get_f64(is);
  const auto n = detail::get_le<std::uint32_t>(is);
  e.grid = HurstGrid::make(H, T, n);
  e.d = detail::get_le<std::uint16_t>(is);
  e.n_paths = detail::get_le<std::uint32_t>(is);
  e.seed = detail::get_le<std::uint64_t>(is);
  const auto tag = detail::get_le<std::uint8_t>(is);
  if (tag > 2) throw std::runtime_error("path cache: unknown generator tag");
  e.generator = static_cast<Generator>(tag);
  const auto n_dw = detail::get_le<std::uint64_t>(is);
  if (n_dw != 0 && n_dw != e.n_paths * e.grid.n_steps * e.d) throw std::runtime_error("path cache: dW section size mismatch");
  e.dW.resize(n_dw);
  for (auto& x : e.dW) x = detail::get_f64(is);
  e.B.resize(e.n_paths * e.grid.n_nodes() * e.d);
  for (auto& x : e.B) x = detail::get_f64(is);
  return e;
}

inline void save_cache(const std::string& path, const FbmEnsemble& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_cache(os, e);
}

inline FbmEnsemble load_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_cache(is);
}

// CSV: path_id, t, B_1..B_d.
inline void write_csv(std::ostream& os, const FbmEnsemble& e) {
  std::string line = "path_id,t";
  for (std::size_t c = 0; c < e.d; ++c) line += ",B_" + std::to_string(c + 1);
  os << line << '\n';
  for (std::size_t p = 0; p < e.n_paths; ++p)
    for (std::size_t i = 0; i < e.grid.n_nodes(); ++i) {
      line = std::to_string(e.first_path + p) + ",";
      detail::append_number(line, e.grid.time(i));
      for (std::size_t c = 0; c < e.d; ++c) {
        line += ',';
        detail::append_number(line, e.b(p, i, c));
      }
      os << line << '\n';
    }
}

}  // namespace fracsde::fbm
