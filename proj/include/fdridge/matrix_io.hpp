#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdridge/types.hpp"

// Binary matrix file format "FDRM":
//   magic "FDRM", u32 version=1, u64 rows, u64 cols,
//   rows*cols little-endian float64, row-major.

namespace fdridge {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double d) {
  put_u64(os, std::bit_cast<std::uint64_t>(d));
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

}  // namespace detail

inline void write_fdrm(std::ostream& os, const Eigen::Ref<const Matrix>& m) {
  require(all_finite(m), "write_fdrm: non-finite entries");
  os.write("FDRM", 4);
  detail::put_u32(os, 1u);
  detail::put_u64(os, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::put_f64(os, m(i, j));
  if (!os) throw std::invalid_argument("write_fdrm: stream write failed");
}

inline void write_fdrm(const std::string& path,
                       const Eigen::Ref<const Matrix>& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::invalid_argument("write_fdrm: cannot open " + path);
  write_fdrm(os, m);
}

inline Matrix read_fdrm(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FDRM", 4) != 0)
    throw std::invalid_argument("read_fdrm: bad magic");
  const std::uint32_t version = detail::get_u32(is);
  if (version != 1u)
    throw std::invalid_argument("read_fdrm: unsupported version");
  const std::uint64_t rows = detail::get_u64(is);
  const std::uint64_t cols = detail::get_u64(is);
  if (!is || rows == 0 || cols == 0 || rows > (1ull << 32) ||
      cols > (1ull << 32))
    throw std::invalid_argument("read_fdrm: bad dimensions");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = detail::get_f64(is);
  if (!is) throw std::invalid_argument("read_fdrm: truncated payload");
  if (!all_finite(m))
    throw std::invalid_argument("read_fdrm: non-finite entries");
  return m;
}

inline Matrix read_fdrm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("read_fdrm: cannot open " + path);
  return read_fdrm(is);
}

// CSV (no header, comma-separated float64), for small matrices.

inline void write_csv_matrix(std::ostream& os,
                             const Eigen::Ref<const Matrix>& m) {
  os.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

inline void write_csv_matrix(const std::string& path,
                             const Eigen::Ref<const Matrix>& m) {
  std::ofstream os(path);
  if (!os)
    throw std::invalid_argument("write_csv_matrix: cannot open " + path);
  write_csv_matrix(os, m);
}

inline Matrix read_csv_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("read_csv_matrix: bad number '" + cell +
                                    "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("read_csv_matrix: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("read_csv_matrix: empty file");
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("read_csv_matrix: cannot open " + path);
  return read_csv_matrix(is);
}

}  // namespace fdridge
