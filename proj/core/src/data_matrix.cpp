#include "tsb/data_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "tsb/errors.hpp"

namespace tsb {

DataMatrix::DataMatrix(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols),
      values_(static_cast<std::size_t>(rows * cols), 0.0) {
  if (rows < 1 || cols < 1) {
    throw DimensionMismatch("DataMatrix requires rows >= 1 and cols >= 1");
  }
}

DataMatrix DataMatrix::from_values(Eigen::Index rows, Eigen::Index cols,
                                   std::vector<double> values) {
  DataMatrix m(rows, cols);
  if (values.size() != static_cast<std::size_t>(rows * cols)) {
    throw DimensionMismatch("DataMatrix value count does not match shape");
  }
  m.values_ = std::move(values);
  return m;
}

std::vector<double> DataMatrix::column(Eigen::Index c) const {
  std::vector<double> out(static_cast<std::size_t>(rows_));
  for (Eigen::Index r = 0; r < rows_; ++r) out[static_cast<std::size_t>(r)] = (*this)(r, c);
  return out;
}

Eigen::VectorXd DataMatrix::point(Eigen::Index r) const {
  Eigen::VectorXd v(cols_);
  for (Eigen::Index c = 0; c < cols_; ++c) v(c) = (*this)(r, c);
  return v;
}

bool DataMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

SortedSample::SortedSample(std::vector<double> values)
    : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
}

SortedSample SortedSample::from_sorted(std::vector<double> values) {
  SortedSample s;
  s.values_ = std::move(values);
  return s;
}

double ecdf_eval(const SortedSample& sample, double u) {
  const auto& v = sample.values();
  const auto count = std::upper_bound(v.begin(), v.end(), u) - v.begin();
  return static_cast<double>(count) / static_cast<double>(v.size());
}

}  // namespace tsb
