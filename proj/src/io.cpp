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

#include "readout_lab/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "readout_lab/errors.hpp"

namespace rlab {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    std::memcpy(&bits, &value, 8);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError(std::string("container truncated while reading ") + what);
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>) {
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_container(std::ostream& out, const Container& c) {
  out.write(kContainerMagic.data(), kContainerMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.header.size()));
  for (double h : c.header) put_le<double>(out, h);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.matrices.size()));
  for (const Matrix& m : c.matrices) {
    put_le<std::uint64_t>(out, m.rows());
    put_le<std::uint64_t>(out, m.cols());
    for (double v : m.data()) put_le<double>(out, v);
  }
}

Container read_container(std::istream& in) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size()) ||
      std::string_view(magic.data(), magic.size()) != kContainerMagic) {
    throw FormatError("not a MCHI1 container");
  }
  Container c;
  const auto headers = get_le<std::uint32_t>(in, "header count");
  for (std::uint32_t i = 0; i < headers; ++i) c.header.push_back(get_le<double>(in, "header"));
  const auto count = get_le<std::uint32_t>(in, "matrix count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rows = get_le<std::uint64_t>(in, "rows");
    const auto cols = get_le<std::uint64_t>(in, "cols");
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw FormatError("container shape too large");
    Matrix m(rows, cols);
    for (double& v : m.data()) v = get_le<double>(in, "payload");
    c.matrices.push_back(std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after container");
  return c;
}

void write_container_file(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_container(out, c);
}

Container read_container_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_container(in);
}

Matrix read_csv_matrix(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t width = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto first = cell.find_first_not_of(" \t\r");
      const auto last = cell.find_last_not_of(" \t\r");
      if (first == std::string::npos) {
        throw FormatError("csv line " + std::to_string(line_no) + ": empty cell");
      }
      cell = cell.substr(first, last - first + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw FormatError("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      data.push_back(v);
      ++width;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) cols = width;
    if (width != cols) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " columns, got " + std::to_string(width));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("csv: no rows");
  return Matrix(rows, cols, std::move(data));
}

void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::array<char, 5> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 5 && std::string_view(head.data(), 5) == kContainerMagic;
  in.clear();
  in.seekg(0);
  if (binary) {
    Container c = read_container(in);
    if (c.matrices.empty()) throw FormatError(path + ": container holds no matrix");
    return std::move(c.matrices.front());
  }
  return read_csv_matrix(in);
}

std::vector<std::size_t> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string cell = line.substr(first, last - first + 1);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw FormatError(path + " line " + std::to_string(line_no) + ": bad label '" + cell + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf.data(), ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes);
  return s.str();
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

}  // namespace rlab
