// core/src/binary-io.cc

// Copyright 2026  relid contributors

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

#include "relid/binary-io.h"

#include <bit>
#include <cstring>
#include <fstream>

namespace relid {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kMissingArtifact: return "missing-artifact";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

namespace io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void WriteRaw(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
  if (!os) Fail(ErrorKind::kIo, "write failed");
}

template <typename T>
T ReadRaw(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    Fail(ErrorKind::kFormat, "truncated file");
  return v;
}

}  // namespace

void WriteMagic(std::ostream &os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void ExpectMagic(std::istream &is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (is.gcount() != static_cast<std::streamsize>(magic.size()) || got != magic)
    Fail(ErrorKind::kFormat,
         "bad magic: expected '" + std::string(magic) + "'");
}

void WriteU8(std::ostream &os, std::uint8_t v) { WriteRaw(os, v); }
void WriteU16(std::ostream &os, std::uint16_t v) { WriteRaw(os, v); }
void WriteI16(std::ostream &os, std::int16_t v) { WriteRaw(os, v); }
void WriteU32(std::ostream &os, std::uint32_t v) { WriteRaw(os, v); }
void WriteU64(std::ostream &os, std::uint64_t v) { WriteRaw(os, v); }
void WriteF32(std::ostream &os, float v) { WriteRaw(os, v); }
void WriteF64(std::ostream &os, double v) { WriteRaw(os, v); }

void WriteString(std::ostream &os, std::string_view s) {
  Require(s.size() <= 0xffff, ErrorKind::kInvalidArgument, "string too long");
  WriteU16(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint8_t ReadU8(std::istream &is) { return ReadRaw<std::uint8_t>(is); }
std::uint16_t ReadU16(std::istream &is) { return ReadRaw<std::uint16_t>(is); }
std::int16_t ReadI16(std::istream &is) { return ReadRaw<std::int16_t>(is); }
std::uint32_t ReadU32(std::istream &is) { return ReadRaw<std::uint32_t>(is); }
std::uint64_t ReadU64(std::istream &is) { return ReadRaw<std::uint64_t>(is); }
float ReadF32(std::istream &is) { return ReadRaw<float>(is); }
double ReadF64(std::istream &is) { return ReadRaw<double>(is); }

std::string ReadString(std::istream &is) {
  std::uint16_t n = ReadU16(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != n) Fail(ErrorKind::kFormat, "truncated string");
  return s;
}

void WriteF32Matrix(std::ostream &os, const Matrix &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      WriteF32(os, static_cast<float>(m(r, c)));
}

Matrix ReadF32Matrix(std::istream &is, std::size_t rows, std::size_t cols) {
  CheckDims(rows, cols, "matrix");
  std::vector<float> buf(rows * cols);
  is.read(reinterpret_cast<char *>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    Fail(ErrorKind::kFormat, "truncated matrix data");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = buf[r * cols + c];
  return m;
}

void CheckDims(std::uint64_t rows, std::uint64_t cols, std::string_view what) {
  constexpr std::uint64_t kMaxElements = 1ULL << 31;
  if (rows > kMaxElements || cols > kMaxElements ||
      (cols != 0 && rows > kMaxElements / cols))
    Fail(ErrorKind::kFormat, "dimension overflow in " + std::string(what));
}

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::ofstream OpenOut(const std::string &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open for writing: " + path);
  return os;
}

std::ifstream OpenIn(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kMissingArtifact, "cannot open: " + path);
  return is;
}

}  // namespace io
}  // namespace relid
