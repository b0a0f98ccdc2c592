// Copyright 2026 The Readout Lab Authors.
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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "readout_lab/matrix.hpp"

namespace rlab {

/// Binary container used for checkpoints and embedding inputs:
///
///   "MCHI1"
///   u32 header_count, then header_count f64 values
///   u32 matrix_count, then per matrix: u64 rows, u64 cols, rows*cols f64
///
/// All integers and floats little-endian; payloads row-major.
struct Container {
  std::vector<double> header;
  std::vector<Matrix> matrices;
};

inline constexpr std::string_view kContainerMagic = "MCHI1";

void write_container(std::ostream& out, const Container& c);
/// Throws FormatError on a bad magic, truncation, or trailing bytes.
Container read_container(std::istream& in);
void write_container_file(const std::string& path, const Container& c);
Container read_container_file(const std::string& path);

/// Header-free comma-separated rows; every row must have the same width.
Matrix read_csv_matrix(std::istream& in);
void write_csv_matrix(std::ostream& out, const Matrix& m);

/// Binary container (first matrix) when the file starts with the magic,
/// CSV otherwise.
Matrix read_matrix_file(const std::string& path);
/// One non-negative class id per non-empty line.
std::vector<std::size_t> read_labels_file(const std::string& path);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);
/// Checksum of a whole file; throws FormatError when it cannot be read.
std::string file_checksum(const std::string& path);

}  // namespace rlab
