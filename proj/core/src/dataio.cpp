#include "tsb/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tsb/errors.hpp"
#include "tsb/warnings.hpp"

namespace tsb {

namespace {

constexpr char kRawMagic[4] = {'T', 'S', 'B', '1'};

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path.string());

  std::string line;
  if (!std::getline(is, line)) throw ParseError(path.string() + ": missing header row");
  Dataset ds;
  ds.feature_names = split_csv_line(line);
  const auto d = static_cast<Eigen::Index>(ds.feature_names.size());
  if (d < 1) throw ParseError(path.string() + ": empty header");

  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const auto* first = fields[c].data();
      const auto* last = first + fields[c].size();
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last) {
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         ", column " + std::to_string(c + 1) + ": bad number '" +
                         fields[c] + "'");
      }
      if (!std::isfinite(v)) {
        throw NonFiniteValue(path.string() + ": row " + std::to_string(row) +
                             ", column " + std::to_string(c + 1));
      }
      values.push_back(v);
    }
  }
  const auto n = static_cast<Eigen::Index>(values.size()) / d;
  if (n < 1) throw ParseError(path.string() + ": no data rows");
  ds.matrix = DataMatrix::from_values(n, d, std::move(values));
  return ds;
}

Dataset load_raw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path.string());

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kRawMagic, 4) != 0) {
    throw ParseError(path.string() + ": bad magic, not a TSB1 file");
  }
  const std::uint32_t n = read_u32_le(is);
  const std::uint32_t d = read_u32_le(is);
  read_u32_le(is);  // reserved
  if (!is || n < 1 || d < 1) throw ParseError(path.string() + ": bad header counts");

  std::vector<double> values(static_cast<std::size_t>(n) * d);
  for (auto& v : values) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw ParseError(path.string() + ": truncated value block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
    if (!std::isfinite(v)) throw NonFiniteValue(path.string() + ": non-finite value");
  }

  Dataset ds;
  ds.matrix = DataMatrix::from_values(static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(d), std::move(values));
  ds.feature_names.reserve(d);
  for (std::uint32_t c = 0; c < d; ++c) ds.feature_names.push_back("f" + std::to_string(c));
  return ds;
}

// A feature whose spread is vanishing against the overall data range acts
// like a point mass: any deformation of it is detectable at arbitrarily
// small strength and the threshold search cannot settle.
void warn_on_narrow_features(const Dataset& ds) {
  const auto& m = ds.matrix;
  double global_lo = m(0, 0), global_hi = m(0, 0);
  for (double v : m.values()) {
    global_lo = std::min(global_lo, v);
    global_hi = std::max(global_hi, v);
  }
  const double global_range = global_hi - global_lo;
  if (global_range <= 0.0) return;

  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    double var = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double dv = m(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(std::max<Eigen::Index>(1, m.rows() - 1));
    if (std::sqrt(var) < 1e-6 * global_range) {
      warn("feature '" + ds.feature_names[static_cast<std::size_t>(c)] +
           "' is extremely narrow relative to the data range; threshold "
           "searches on it may not converge");
    }
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  Dataset ds = format == DataFormat::Csv ? load_csv(path) : load_raw(path);
  ds.source_path = path.string();
  ds.content_hash = hash_values(ds.matrix);
  warn_on_narrow_features(ds);
  return ds;
}

void save_dataset_csv(const DataMatrix& m,
                      const std::vector<std::string>& feature_names,
                      const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(feature_names.size()) != m.cols()) {
    throw DimensionMismatch("save_dataset_csv: feature name count mismatch");
  }
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path.string());
  for (std::size_t c = 0; c < feature_names.size(); ++c) {
    if (c) os << ',';
    os << feature_names[c];
  }
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

void save_dataset_raw(const DataMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot write " + path.string());
  os.write(kRawMagic, 4);
  write_u32_le(os, static_cast<std::uint32_t>(m.rows()));
  write_u32_le(os, static_cast<std::uint32_t>(m.cols()));
  write_u32_le(os, 0);
  for (double v : m.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
  }
}

Digest128 hash_values(const DataMatrix& m) {
  Hasher h;
  h.u64(static_cast<std::uint64_t>(m.rows()));
  h.u64(static_cast<std::uint64_t>(m.cols()));
  for (double v : m.values()) h.f64(v);
  return h.digest();
}

ScaleInfo compute_scale(const DataMatrix& m) {
  ScaleInfo info;
  info.means.resize(m.cols());
  info.stds.resize(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    double var = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double dv = m(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(std::max<Eigen::Index>(1, m.rows() - 1));
    if (var <= 0.0) throw ConstantFeature(static_cast<std::size_t>(c));
    info.means(c) = mean;
    info.stds(c) = std::sqrt(var);
  }
  return info;
}

DataMatrix standardize(const DataMatrix& m, const ScaleInfo& scale) {
  if (scale.means.size() != m.cols()) {
    throw DimensionMismatch("standardize: scale dimension mismatch");
  }
  DataMatrix out = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(r, c) = (m(r, c) - scale.means(c)) / scale.stds(c);
  return out;
}

DataMatrix destandardize(const DataMatrix& m, const ScaleInfo& scale) {
  if (scale.means.size() != m.cols()) {
    throw DimensionMismatch("destandardize: scale dimension mismatch");
  }
  DataMatrix out = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(r, c) = m(r, c) * scale.stds(c) + scale.means(c);
  return out;
}

std::pair<Dataset, ScaleInfo> standardize(const Dataset& ds) {
  ScaleInfo info = compute_scale(ds.matrix);
  Dataset out;
  out.matrix = standardize(ds.matrix, info);
  out.feature_names = ds.feature_names;
  out.source_path = ds.source_path;
  out.content_hash = hash_values(out.matrix);
  return {std::move(out), std::move(info)};
}

std::pair<DataMatrix, DataMatrix> split_half(const DataMatrix& m,
                                             RngStream& stream) {
  const Eigen::Index n = m.rows();
  if (n < 2) throw TooFewPoints("split_half requires at least 2 rows");
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  const Eigen::Index half = n / 2;
  DataMatrix first(half, m.cols());
  DataMatrix second(n - half, m.cols());
  for (Eigen::Index r = 0; r < half; ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      first(r, c) = m(idx[static_cast<std::size_t>(r)], c);
  for (Eigen::Index r = half; r < n; ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      second(r - half, c) = m(idx[static_cast<std::size_t>(r)], c);
  return {std::move(first), std::move(second)};
}

DataMatrix bootstrap_draw(const DataMatrix& half, Eigen::Index n,
                          RngStream& stream, bool with_replacement) {
  if (n < 1) throw TooFewPoints("bootstrap_draw: n >= 1 required");
  const Eigen::Index rows = half.rows();
  DataMatrix out(n, half.cols());
  if (with_replacement) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto pick = static_cast<Eigen::Index>(
          stream.next_below(static_cast<std::uint64_t>(rows)));
      for (Eigen::Index c = 0; c < half.cols(); ++c) out(r, c) = half(pick, c);
    }
    return out;
  }
  if (n > rows) {
    throw TooFewPoints("bootstrap_draw without replacement: n exceeds rows");
  }
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(rows));
  std::iota(idx.begin(), idx.end(), 0u);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           stream.next_below(static_cast<std::uint64_t>(rows - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < half.cols(); ++c)
      out(r, c) = half(idx[static_cast<std::size_t>(r)], c);
  return out;
}

}  // namespace tsb
