// Copyright 2026 The Anticipate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by the binary containers.

#ifndef ANTICIPATE_SRC_BINARY_IO_H_
#define ANTICIPATE_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>

namespace anticipate::internal {

inline void PutU32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void PutU64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void PutF64(std::ostream& out, double v) {
  PutU64(out, std::bit_cast<std::uint64_t>(v));
}

// Reads fixed-width fields; `fail` must throw.
class Reader {
 public:
  using FailFn = std::function<void(const std::string&)>;

  Reader(std::istream& in, FailFn fail) : in_(in), fail_(std::move(fail)) {}

  void Bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail_("truncated container");
  }
  std::uint64_t Uint(int width) {
    unsigned char b[8];
    Bytes(reinterpret_cast<char*>(b), width);
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Uint(4)); }
  std::uint64_t U64() { return Uint(8); }
  double F64() { return std::bit_cast<double>(U64()); }
  bool AtEnd() { return in_.peek() == std::char_traits<char>::eof(); }
  [[noreturn]] void Fail(const std::string& what) {
    fail_(what);
    throw std::logic_error(what);  // fail_ is required to throw
  }

 private:
  std::istream& in_;
  FailFn fail_;
};

}  // namespace anticipate::internal

#endif  // ANTICIPATE_SRC_BINARY_IO_H_
