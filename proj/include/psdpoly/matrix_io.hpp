#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdpoly/matrix.hpp"

// Binary matrix container:
//   "PSDM" | u32 version = 1 | u64 n | n*n f64 row-major, all little-endian.

namespace psdpoly {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw FormatError("PSDM: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr std::uint32_t kPsdmVersion = 1;

inline void write_psdm(std::ostream& os, const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("PSDM: matrix must be square");
  os.write("PSDM", 4);
  detail::write_le<std::uint32_t>(os, kPsdmVersion);
  detail::write_le<std::uint64_t>(os, m.rows());
  for (double v : m.values()) detail::write_le<double>(os, v);
}

inline Matrix read_psdm(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "PSDM", 4) != 0)
    throw FormatError("PSDM: bad magic bytes");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kPsdmVersion)
    throw FormatError("PSDM: unsupported version " + std::to_string(version));
  const auto n = detail::read_le<std::uint64_t>(is);
  if (n == 0 || n > (1u << 16)) throw FormatError("PSDM: implausible dimension");
  std::vector<double> vals(n * n);
  for (double& v : vals) v = detail::read_le<double>(is);
  return Matrix(n, n, std::move(vals));
}

/// n lines of n comma-separated decimals.
inline Matrix read_csv_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        r.push_back(std::stod(cell, &pos));
        if (cell.find_first_not_of(" \t\r", pos) != std::string::npos) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw FormatError("CSV: cannot parse '" + cell + "' on line " +
                          std::to_string(rows.size() + 1));
      }
    }
    rows.push_back(std::move(r));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw FormatError("CSV: empty matrix");
  std::vector<double> vals;
  vals.reserve(n * n);
  for (const auto& r : rows) {
    if (r.size() != n)
      throw FormatError("CSV: expected " + std::to_string(n) + " columns, got " +
                        std::to_string(r.size()));
    vals.insert(vals.end(), r.begin(), r.end());
  }
  return Matrix(n, n, std::move(vals));
}

inline void write_csv_matrix(std::ostream& os, const Matrix& m) {
  os.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

/// Loads by extension: ".csv" as CSV, anything else as PSDM.
inline Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  if (path.extension() == ".csv") return read_csv_matrix(is);
  return read_psdm(is);
}

inline void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  if (path.extension() == ".csv")
    write_csv_matrix(os, m);
  else
    write_psdm(os, m);
}

}  // namespace psdpoly
