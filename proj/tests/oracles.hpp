// Test-only reference implementations, kept deliberately naive and
// independent of the library's computation paths.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tsb/data_matrix.hpp"
#include "tsb/rng.hpp"

namespace oracles {

inline double ecdf_linear_scan(const std::vector<double>& values, double u) {
  std::size_t count = 0;
  for (double v : values) {
    if (v <= u) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

inline double poly_kernel_naive(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double dot = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) dot += a(i) * b(i);
  const double g = dot / static_cast<double>(a.size()) + 1.0;
  return g * g * g * g;
}

inline double mmd_triple_loop(const tsb::DataMatrix& x, const tsb::DataMatrix& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) xx += poly_kernel_naive(x.point(i), x.point(j));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) yy += poly_kernel_naive(y.point(i), y.point(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) xy += poly_kernel_naive(x.point(i), y.point(j));
  return xx / (static_cast<double>(n) * (n - 1)) +
         yy / (static_cast<double>(m) * (m - 1)) -
         2.0 * xy / (static_cast<double>(n) * static_cast<double>(m));
}

// sup over the union of sample points of |F_n - G_m|, scaled as the KS
// statistic; an eCDF step function attains its sup at sample points.
inline double ks_grid_sup(std::vector<double> xs, std::vector<double> ys) {
  const double n = static_cast<double>(xs.size());
  const double m = static_cast<double>(ys.size());
  std::vector<double> grid = xs;
  grid.insert(grid.end(), ys.begin(), ys.end());
  double sup = 0.0;
  for (double u : grid) {
    const double f = ecdf_linear_scan(xs, u);
    const double g = ecdf_linear_scan(ys, u);
    sup = std::max(sup, std::abs(f - g));
  }
  return std::sqrt(n * m / (n + m)) * sup;
}

// integral of |F_n - G_m| du, integrated exactly between consecutive
// breakpoints of the merged step function.
inline double w1_ecdf_integral(std::vector<double> xs, std::vector<double> ys) {
  std::vector<double> grid = xs;
  grid.insert(grid.end(), ys.begin(), ys.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double f = ecdf_linear_scan(xs, grid[i]);
    const double g = ecdf_linear_scan(ys, grid[i]);
    integral += std::abs(f - g) * (grid[i + 1] - grid[i]);
  }
  return integral;
}

// trace of sqrt(A B) through the eigenvalues of the (nonsymmetric) product.
inline double trace_sqrt_nonsymmetric(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(a * b);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    acc += std::sqrt(std::max(0.0, eig.eigenvalues()(i).real()));
  }
  return acc;
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Kolmogorov CDF with long-double accumulation and a deep term cutoff.
inline double kolmogorov_cdf_reference(double x) {
  if (x <= 0.0) return 0.0;
  long double sum = 0.0L;
  long double sign = 1.0L;
  for (int k = 1; k <= 2000; ++k) {
    const long double term = std::exp(-2.0L * k * k * static_cast<long double>(x) * x);
    sum += sign * term;
    if (term < 1e-22L) break;
    sign = -sign;
  }
  const long double value = 1.0L - 2.0L * sum;
  return static_cast<double>(std::max(0.0L, std::min(1.0L, value)));
}

inline Eigen::MatrixXd random_spd(Eigen::Index d, tsb::RngStream& stream) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = stream.normal();
  Eigen::MatrixXd spd = m * m.transpose();
  spd.diagonal().array() += 0.5;
  return spd;
}

inline tsb::DataMatrix random_matrix(Eigen::Index n, Eigen::Index d,
                                     tsb::RngStream& stream) {
  tsb::DataMatrix out(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) out(r, c) = stream.normal();
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  var /= static_cast<double>(values.size() - 1);
  out.std = std::sqrt(var);
  out.se = out.std / std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace oracles
