// core/include/relid/binary-io.h

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

#ifndef RELID_BINARY_IO_H_
#define RELID_BINARY_IO_H_

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relid/common.h"

namespace relid::io {

// Little-endian primitive codecs shared by every binary artifact format.
// Readers throw Error(kFormat) on truncation.

void WriteMagic(std::ostream &os, std::string_view magic);
void ExpectMagic(std::istream &is, std::string_view magic);

void WriteU8(std::ostream &os, std::uint8_t v);
void WriteU16(std::ostream &os, std::uint16_t v);
void WriteI16(std::ostream &os, std::int16_t v);
void WriteU32(std::ostream &os, std::uint32_t v);
void WriteU64(std::ostream &os, std::uint64_t v);
void WriteF32(std::ostream &os, float v);
void WriteF64(std::ostream &os, double v);
void WriteString(std::ostream &os, std::string_view s);  // u16 length + bytes

std::uint8_t ReadU8(std::istream &is);
std::uint16_t ReadU16(std::istream &is);
std::int16_t ReadI16(std::istream &is);
std::uint32_t ReadU32(std::istream &is);
std::uint64_t ReadU64(std::istream &is);
float ReadF32(std::istream &is);
double ReadF64(std::istream &is);
std::string ReadString(std::istream &is);

// Double-precision matrices are narrowed to 32-bit floats on write.
void WriteF32Matrix(std::ostream &os, const Matrix &m);
Matrix ReadF32Matrix(std::istream &is, std::size_t rows, std::size_t cols);

// Guards header-declared sizes before allocating.
void CheckDims(std::uint64_t rows, std::uint64_t cols, std::string_view what);

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

std::ofstream OpenOut(const std::string &path);
std::ifstream OpenIn(const std::string &path);

}  // namespace relid::io

#endif  // RELID_BINARY_IO_H_
