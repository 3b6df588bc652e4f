#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"
#include "gmc/mollifier.hpp"

namespace gmc::io {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf.data(), end);
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::string grid_hash(const Grid& g) {
  std::ostringstream os;
  os << "grid:d=" << g.dim();
  for (int a = 0; a < g.dim(); ++a)
    os << ";lo" << a << '=' << format_double(g.box().lo[a]) << ";hi" << a << '=' << format_double(g.box().hi[a])
       << ";n" << a << '=' << g.cells(a);
  return sha256_hex(os.str()).substr(0, 16);
}

/// RFC-4180 CSV: CRLF line endings, mandatory header, quoting on demand.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  template <class... Ts>
  CsvWriter& row(const Ts&... cells) {
    if (sizeof...(cells) != columns_) throw ConsistencyError("csv row width does not match header");
    std::vector<std::string> v;
    v.reserve(sizeof...(cells));
    (v.push_back(cell(cells)), ...);
    row_strings(v);
    return *this;
  }

  CsvWriter& row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ConsistencyError("csv row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(cells[i]);
    }
    out_ << "\r\n";
    ++rows_;
    return *this;
  }

  std::string str() const { return out_.str(); }
  std::size_t data_rows() const { return rows_ - 1; }

  void save(const std::filesystem::path& p) const { write_file(p, out_.str()); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(float v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::size_t columns_;
  std::size_t rows_ = 0;
  std::ostringstream out_;
};

/// Audit dump of a discrete mollifier (offset, weight). In d = 2 the
/// offset column holds the Euclidean length of the lattice offset.
inline CsvWriter profile_csv(const DiscreteKernel& k, const Grid& grid) {
  CsvWriter w({"offset", "weight"});
  for (std::size_t m = 0; m < k.weights.size(); ++m) {
    const double dx = k.offsets[m][0] * grid.spacing(0);
    const double dy = grid.dim() == 2 ? k.offsets[m][1] * grid.spacing(1) : 0.0;
    w.row(grid.dim() == 1 ? dx : std::hypot(dx, dy), k.weights[m]);
  }
  return w;
}

}  // namespace gmc::io
