#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tsb {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x d sample container, one point per row, row-major storage.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(Eigen::Index rows, Eigen::Index cols);
  static DataMatrix from_values(Eigen::Index rows, Eigen::Index cols,
                                std::vector<double> values);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  double operator()(Eigen::Index r, Eigen::Index c) const {
    return values_[static_cast<std::size_t>(r * cols_ + c)];
  }
  double& operator()(Eigen::Index r, Eigen::Index c) {
    return values_[static_cast<std::size_t>(r * cols_ + c)];
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  Eigen::Map<const RowMatrixXd> view() const {
    return {values_.data(), rows_, cols_};
  }
  Eigen::Map<RowMatrixXd> view() { return {values_.data(), rows_, cols_}; }

  std::vector<double> column(Eigen::Index c) const;
  Eigen::VectorXd point(Eigen::Index r) const;

  bool all_finite() const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<double> values_;
};

/// Non-decreasing sample, the substrate for eCDF queries and 1D statistics.
class SortedSample {
 public:
  explicit SortedSample(std::vector<double> values);
  static SortedSample from_sorted(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  SortedSample() = default;
  std::vector<double> values_;
};

/// Right-continuous empirical CDF: (#values <= u) / n.
double ecdf_eval(const SortedSample& sample, double u);

}  // namespace tsb
