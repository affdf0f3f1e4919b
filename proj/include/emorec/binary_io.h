// include/emorec/binary_io.h

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOREC_BINARY_IO_H_
#define EMOREC_BINARY_IO_H_

// Little-endian primitives shared by the WAV, EMSP and EMCK readers/writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "emorec/error.h"

namespace emorec::binio {

template <typename T>
T load_le(const unsigned char *p) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(U(p[i]) << (8 * i));
  return std::bit_cast<T>(u);
}

template <typename T>
void write(std::ostream &os, T v) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U u = std::bit_cast<U>(v);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char *>(buf), sizeof(T));
}

template <typename T>
T read(std::istream &is, const std::string &what) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char *>(buf), sizeof(T)))
    throw DataError("unexpected end of file while reading " + what);
  return load_le<T>(buf);
}

inline void write_string(std::ostream &os, const std::string &s) {
  write<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream &is, const std::string &what,
                               std::uint32_t max_len = 1u << 20) {
  const auto n = read<std::uint32_t>(is, what);
  if (n > max_len) throw DataError("implausible string length while reading " + what);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) throw DataError("unexpected end of file while reading " + what);
  return s;
}

inline void expect_magic(std::istream &is, const char (&magic)[5], const std::string &path) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw DataError(path + ": bad magic, expected " + std::string(magic, 4));
}

}  // namespace emorec::binio

#endif  // EMOREC_BINARY_IO_H_
