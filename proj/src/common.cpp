#include "uent/common.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uent {

namespace {

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw NonFinite("sample matrix contains NaN or Inf");
}

}  // namespace

SampleSet::SampleSet(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw TooFewSamples("sample set needs at least one row and one column");
  check_finite(data_);
}

SampleSet::SampleSet(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty())
    throw TooFewSamples("sample set needs at least one row and one column");
  const long d = static_cast<long>(rows.front().size());
  Matrix m(static_cast<long>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<long>(rows[i].size()) != d)
      throw ConfigError("ragged rows in sample set");
    for (long j = 0; j < d; ++j) m(static_cast<long>(i), j) = rows[i][j];
  }
  check_finite(m);
  data_ = std::move(m);
}

SampleSet SampleSet::select_rows(const std::vector<long>& idx) const {
  Matrix out(static_cast<long>(idx.size()), dim());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const long src = idx[i];
    if (src < 0 || src >= n()) throw ConfigError("row index out of range");
    out.row(static_cast<long>(i)) = data_.row(src);
  }
  return SampleSet(std::move(out));
}

std::string format_double(double v) {
  // %.17g survives a strtod round trip for every finite double.
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_csv(const std::string& path, const SampleSet& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  for (long j = 0; j < s.dim(); ++j) out << (j ? ",x" : "x") << j + 1;
  out << "\n";
  for (long i = 0; i < s.n(); ++i) {
    for (long j = 0; j < s.dim(); ++j) {
      if (j) out << ",";
      out << format_double(s.data()(i, j));
    }
    out << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path);
}

SampleSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + cell + "' in " + path);
      }
      if (used != cell.size()) throw ConfigError("bad number '" + cell + "' in " + path);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw TooFewSamples("no data rows in " + path);
  return SampleSet(rows);
}

namespace {

constexpr char kMagic[8] = {'U', 'E', 'N', 'T', 'B', 'I', 'N', '1'};

}  // namespace

void save_binary(const std::string& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out.write(kMagic, sizeof kMagic);
  const std::int64_t n = s.n(), d = s.dim();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(s.data().data()),
            static_cast<std::streamsize>(sizeof(double) * n * d));
  if (!out) throw ConfigError("write failed: " + path);
}

SampleSet load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ConfigError("not a sample file: " + path);
  std::int64_t n = 0, d = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!in || n < 1 || d < 1) throw ConfigError("corrupt header: " + path);
  Matrix m(n, d);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * n * d));
  if (!in) throw ConfigError("truncated data: " + path);
  return SampleSet(std::move(m));
}

}  // namespace uent
