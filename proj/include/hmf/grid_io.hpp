#pragma once

// Binary grid files: "HMFG", u32 version, u64 n_theta, u64 n_v, f64 v_max,
// then n_theta * n_v f64 values, θ-major, all little-endian.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/grid.hpp"

namespace hmf {

inline constexpr std::array<char, 4> grid_magic = {'H', 'M', 'F', 'G'};
inline constexpr std::uint32_t grid_format_version = 1;

namespace detail {

template <class U>
void put_le(std::vector<unsigned char>& out, U x) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<unsigned char>(x >> (8 * b)));
}

template <class U>
U get_le(const unsigned char* p) {
  U x = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) x |= static_cast<U>(p[b]) << (8 * b);
  return x;
}

}  // namespace detail

inline std::vector<unsigned char> encode_grid(const PhaseSpaceGrid& g) {
  std::vector<unsigned char> out;
  out.reserve(32 + 8 * g.values.size());
  out.insert(out.end(), grid_magic.begin(), grid_magic.end());
  detail::put_le<std::uint32_t>(out, grid_format_version);
  detail::put_le<std::uint64_t>(out, g.n_theta);
  detail::put_le<std::uint64_t>(out, g.n_v);
  detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(g.v_max));
  for (double x : g.values) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

inline PhaseSpaceGrid decode_grid(const std::vector<unsigned char>& bytes, const std::string& name = "grid") {
  constexpr std::size_t header = 4 + 4 + 8 + 8 + 8;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), grid_magic.data(), 4) != 0)
    throw Error(name + ": bad magic, expected \"HMFG\"");
  if (bytes.size() < header) throw Error(name + ": truncated header");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != grid_format_version)
    throw Error(name + ": unsupported version " + std::to_string(version) + ", expected " +
                std::to_string(grid_format_version));
  const auto nt = detail::get_le<std::uint64_t>(bytes.data() + 8);
  const auto nv = detail::get_le<std::uint64_t>(bytes.data() + 16);
  const double v_max = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes.data() + 24));
  const std::size_t payload = bytes.size() - header;
  if (nv != 0 && nt > payload / 8 / nv)
    throw Error(name + ": truncated payload, header promises " + std::to_string(nt) + " x " +
                std::to_string(nv) + " values but only " + std::to_string(payload / 8) + " are present");
  if (payload != 8 * nt * nv)
    throw Error(name + ": payload holds " + std::to_string(payload) + " bytes, header promises " +
                std::to_string(8 * nt * nv));
  PhaseSpaceGrid g(static_cast<std::size_t>(nt), static_cast<std::size_t>(nv), v_max);
  for (std::size_t k = 0; k < g.values.size(); ++k)
    g.values[k] = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes.data() + header + 8 * k));
  return g;
}

inline void write_grid(const PhaseSpaceGrid& g, const std::string& path) {
  const auto bytes = encode_grid(g);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write to " + path + " failed");
}

inline PhaseSpaceGrid read_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_grid(bytes, path);
}

}  // namespace hmf
