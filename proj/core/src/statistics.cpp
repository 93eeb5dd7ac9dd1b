#include "tsb/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tsb/errors.hpp"
#include "tsb/directions.hpp"
#include "tsb/parallel.hpp"

namespace tsb {

namespace {

constexpr Eigen::Index kGramBlock = 256;       // fixed so sums are layout-stable
constexpr Eigen::Index kProjectionChunk = 32;  // directions per GEMM

void check_same_dim(const DataMatrix& x, const DataMatrix& y) {
  if (x.cols() != y.cols()) {
    throw DimensionMismatch("samples have different feature counts");
  }
}

// Pairwise reduction; keeps O(n^2) accumulations accurate and independent
// of traversal order as long as the input layout is fixed.
double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

std::vector<double> sorted_projection(const DataMatrix& m,
                                      const Eigen::MatrixXd& projected,
                                      Eigen::Index col) {
  std::vector<double> vals(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    vals[static_cast<std::size_t>(i)] = projected(i, col);
  std::sort(vals.begin(), vals.end());
  return vals;
}

double sliced_mean(const DataMatrix& x, const DataMatrix& y,
                   const MetricConfig& cfg, RngStream& stream,
                   double (*one_dim)(const SortedSample&, const SortedSample&)) {
  check_same_dim(x, y);
  if (cfg.slices < 1) throw DomainError("slice count must be >= 1");
  const Eigen::Index d = x.cols();
  const Eigen::MatrixXd dirs = sample_unit_directions(d, cfg.slices, stream);

  std::vector<double> per_direction(static_cast<std::size_t>(cfg.slices));
  for (Eigen::Index start = 0; start < cfg.slices; start += kProjectionChunk) {
    const Eigen::Index stop = std::min(cfg.slices, start + kProjectionChunk);
    const auto block = dirs.middleRows(start, stop - start);
    const Eigen::MatrixXd px = x.view() * block.transpose();
    const Eigen::MatrixXd py = y.view() * block.transpose();
    for (Eigen::Index k = start; k < stop; ++k) {
      const auto xs = SortedSample::from_sorted(sorted_projection(x, px, k - start));
      const auto ys = SortedSample::from_sorted(sorted_projection(y, py, k - start));
      per_direction[static_cast<std::size_t>(k)] = one_dim(xs, ys);
    }
  }
  return pairwise_sum(per_direction) / static_cast<double>(cfg.slices);
}

// Sum of (g/d + 1)^4 over a Gram block, optionally skipping the diagonal.
double kernel_block_sum(const Eigen::Ref<const RowMatrixXd>& a,
                        const Eigen::Ref<const RowMatrixXd>& b,
                        double inv_d, bool skip_diagonal) {
  const Eigen::MatrixXd gram = a * b.transpose();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (skip_diagonal && i == j) continue;
      const double g = gram(i, j) * inv_d + 1.0;
      const double g2 = g * g;
      acc += g2 * g2;
    }
  }
  return acc;
}

// Diagonal-excluded sum of k(a_i, a_j) over i != j.
double within_kernel_sum(const DataMatrix& m) {
  const Eigen::Index n = m.rows();
  const double inv_d = 1.0 / static_cast<double>(m.cols());
  const Eigen::Index blocks = (n + kGramBlock - 1) / kGramBlock;
  const std::size_t pairs =
      static_cast<std::size_t>(blocks) * static_cast<std::size_t>(blocks + 1) / 2;

  std::vector<double> partial(pairs, 0.0);
  parallel_for(pairs, 4, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      // enumerate upper-triangle block pairs (bi <= bj)
      std::size_t bi = 0, offset = p;
      std::size_t row_len = static_cast<std::size_t>(blocks);
      while (offset >= row_len) {
        offset -= row_len;
        ++bi;
        --row_len;
      }
      const std::size_t bj = bi + offset;
      const Eigen::Index i0 = static_cast<Eigen::Index>(bi) * kGramBlock;
      const Eigen::Index j0 = static_cast<Eigen::Index>(bj) * kGramBlock;
      const Eigen::Index ilen = std::min(kGramBlock, n - i0);
      const Eigen::Index jlen = std::min(kGramBlock, n - j0);
      const auto a = m.view().middleRows(i0, ilen);
      const auto b = m.view().middleRows(j0, jlen);
      const double s = kernel_block_sum(a, b, inv_d, bi == bj);
      partial[p] = bi == bj ? s : 2.0 * s;
    }
  });
  return pairwise_sum(partial);
}

double cross_kernel_sum(const DataMatrix& x, const DataMatrix& y) {
  const double inv_d = 1.0 / static_cast<double>(x.cols());
  const Eigen::Index xb = (x.rows() + kGramBlock - 1) / kGramBlock;
  const Eigen::Index yb = (y.rows() + kGramBlock - 1) / kGramBlock;
  const std::size_t pairs = static_cast<std::size_t>(xb) * static_cast<std::size_t>(yb);

  std::vector<double> partial(pairs, 0.0);
  parallel_for(pairs, 4, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto bi = static_cast<Eigen::Index>(p / static_cast<std::size_t>(yb));
      const auto bj = static_cast<Eigen::Index>(p % static_cast<std::size_t>(yb));
      const Eigen::Index i0 = bi * kGramBlock;
      const Eigen::Index j0 = bj * kGramBlock;
      const Eigen::Index ilen = std::min(kGramBlock, x.rows() - i0);
      const Eigen::Index jlen = std::min(kGramBlock, y.rows() - j0);
      partial[p] = kernel_block_sum(x.view().middleRows(i0, ilen),
                                    y.view().middleRows(j0, jlen), inv_d, false);
    }
  });
  return pairwise_sum(partial);
}

DataMatrix subsample_rows(const DataMatrix& m, Eigen::Index count,
                          RngStream& stream) {
  const Eigen::Index n = m.rows();
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0u);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           stream.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  DataMatrix out(count, m.cols());
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(i, c) = m(idx[static_cast<std::size_t>(i)], c);
  return out;
}

}  // namespace

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::SW: return "sw";
    case MetricKind::MeanKS: return "mean_ks";
    case MetricKind::SlicedKS: return "sliced_ks";
    case MetricKind::MMD: return "mmd";
    case MetricKind::FGD: return "fgd";
    case MetricKind::LLR: return "llr";
  }
  return "?";
}

std::optional<MetricKind> metric_kind_from_string(std::string_view name) {
  if (name == "sw") return MetricKind::SW;
  if (name == "mean_ks") return MetricKind::MeanKS;
  if (name == "sliced_ks") return MetricKind::SlicedKS;
  if (name == "mmd") return MetricKind::MMD;
  if (name == "fgd") return MetricKind::FGD;
  if (name == "llr") return MetricKind::LLR;
  return std::nullopt;
}

double wasserstein_1d_sorted(const SortedSample& xs, const SortedSample& ys) {
  if (xs.size() != ys.size()) {
    throw UnequalSizes("wasserstein_1d_sorted requires equal sample sizes");
  }
  if (xs.size() == 0) throw TooFewPoints("empty sample");
  const auto& a = xs.values();
  const auto& b = ys.values();
  std::vector<double> gaps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
  return pairwise_sum(gaps) / static_cast<double>(a.size());
}

double sliced_wasserstein(const DataMatrix& x, const DataMatrix& y,
                          const MetricConfig& cfg, RngStream& stream) {
  if (x.rows() != y.rows()) {
    throw UnequalSizes("sliced_wasserstein requires equal sample sizes");
  }
  return sliced_mean(x, y, cfg, stream, &wasserstein_1d_sorted);
}

double ks_1d(const SortedSample& xs, const SortedSample& ys) {
  const auto& a = xs.values();
  const auto& b = ys.values();
  if (a.empty() || b.empty()) throw TooFewPoints("empty sample");
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());

  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < a.size() || j < b.size()) {
    const double v = (i < a.size() && (j >= b.size() || a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / n -
                                 static_cast<double>(j) / m));
  }
  return std::sqrt(n * m / (n + m)) * sup;
}

double mean_ks(const DataMatrix& x, const DataMatrix& y) {
  check_same_dim(x, y);
  const Eigen::Index d = x.cols();
  std::vector<double> per_feature(static_cast<std::size_t>(d));
  parallel_for(static_cast<std::size_t>(d), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const SortedSample xs(x.column(static_cast<Eigen::Index>(c)));
      const SortedSample ys(y.column(static_cast<Eigen::Index>(c)));
      per_feature[c] = ks_1d(xs, ys);
    }
  });
  return pairwise_sum(per_feature) / static_cast<double>(d);
}

double sliced_ks(const DataMatrix& x, const DataMatrix& y,
                 const MetricConfig& cfg, RngStream& stream) {
  return sliced_mean(x, y, cfg, stream, &ks_1d);
}

double poly_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw DimensionMismatch("poly_kernel dimensions differ");
  const double g = x.dot(y) / static_cast<double>(x.size()) + 1.0;
  const double g2 = g * g;
  return g2 * g2;
}

double mmd_unbiased(const DataMatrix& x, const DataMatrix& y) {
  check_same_dim(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  if (n < 2 || m < 2) throw TooFewPoints("mmd_unbiased requires n, m >= 2");

  const double xx = within_kernel_sum(x) / (static_cast<double>(n) * (n - 1));
  const double yy = within_kernel_sum(y) / (static_cast<double>(m) * (m - 1));
  const double xy =
      cross_kernel_sum(x, y) * 2.0 / (static_cast<double>(n) * static_cast<double>(m));
  return xx + yy - xy;
}

GaussianSummary gaussian_summary(const DataMatrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw TooFewPoints("gaussian_summary requires n >= 2");
  GaussianSummary out;
  out.mean = x.view().colwise().mean().transpose();
  const RowMatrixXd centered = x.view().rowwise() - out.mean.transpose();
  out.covariance =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionMismatch("trace_sqrt_product requires square matrices of equal size");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(0.5 * (a + a.transpose()));
  if (eig_a.info() != Eigen::Success) {
    throw FactorizationFailure("trace_sqrt_product: eigendecomposition of A failed");
  }
  const Eigen::VectorXd root_evals = eig_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a =
      eig_a.eigenvectors() * root_evals.asDiagonal() * eig_a.eigenvectors().transpose();

  Eigen::MatrixXd inner = sqrt_a * b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_inner(inner);
  if (eig_inner.info() != Eigen::Success) {
    throw FactorizationFailure("trace_sqrt_product: eigendecomposition of the product failed");
  }
  return eig_inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

double fgd_from_summaries(const GaussianSummary& a, const GaussianSummary& b) {
  const double mean_gap = (a.mean - b.mean).squaredNorm();
  const double trace_part = a.covariance.trace() + b.covariance.trace() -
                            2.0 * trace_sqrt_product(a.covariance, b.covariance);
  return mean_gap + trace_part;
}

double fgd_finite(const DataMatrix& x, const DataMatrix& y) {
  check_same_dim(x, y);
  return fgd_from_summaries(gaussian_summary(x), gaussian_summary(y));
}

double fgd_inf(const DataMatrix& x, const DataMatrix& y,
               const MetricConfig& cfg, RngStream& stream) {
  check_same_dim(x, y);
  if (cfg.fgd_fit_fractions.empty() || cfg.fgd_draws_per_size < 1) {
    throw DomainError("fgd_inf: fit fractions and draw count required");
  }
  const Eigen::Index d = x.cols();
  const double max_fraction =
      *std::max_element(cfg.fgd_fit_fractions.begin(), cfg.fgd_fit_fractions.end());
  const auto min_size = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(std::min(x.rows(), y.rows())) / max_fraction));
  if (min_size < d + 2) {
    throw TooFewPoints("fgd_inf: smallest subsample would be below d + 2");
  }

  std::vector<double> inv_sizes;
  std::vector<double> averages;
  for (std::size_t f = 0; f < cfg.fgd_fit_fractions.size(); ++f) {
    const double fraction = cfg.fgd_fit_fractions[f];
    const auto nx = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(x.rows()) / fraction));
    const auto ny = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(y.rows()) / fraction));
    RngStream level = stream.substream("fgd-level", static_cast<std::uint64_t>(f));
    double acc = 0.0;
    for (Eigen::Index rep = 0; rep < cfg.fgd_draws_per_size; ++rep) {
      RngStream draw = level.substream("draw", static_cast<std::uint64_t>(rep));
      RngStream draw_x = draw.substream("x", 0);
      RngStream draw_y = draw.substream("y", 0);
      const DataMatrix sub_x = nx == x.rows() ? x : subsample_rows(x, nx, draw_x);
      const DataMatrix sub_y = ny == y.rows() ? y : subsample_rows(y, ny, draw_y);
      acc += fgd_finite(sub_x, sub_y);
    }
    inv_sizes.push_back(1.0 / static_cast<double>(nx));
    averages.push_back(acc / static_cast<double>(cfg.fgd_draws_per_size));
  }

  // least squares of the level averages against 1/size; intercept is the
  // infinite-sample estimate
  const double k = static_cast<double>(inv_sizes.size());
  const double mean_x = std::accumulate(inv_sizes.begin(), inv_sizes.end(), 0.0) / k;
  const double mean_y = std::accumulate(averages.begin(), averages.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < inv_sizes.size(); ++i) {
    sxx += (inv_sizes[i] - mean_x) * (inv_sizes[i] - mean_x);
    sxy += (inv_sizes[i] - mean_x) * (averages[i] - mean_y);
  }
  if (sxx <= 0.0) return mean_y;  // all sizes equal: constant fit
  const double slope = sxy / sxx;
  return mean_y - slope * mean_x;
}

double llr(const ModelSpec& model, const Deformation& def, const DataMatrix& y) {
  if (y.cols() != dimension(model)) {
    throw DimensionMismatch("llr: sample dimension does not match model");
  }
  const Eigen::Index n = y.rows();
  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), 1024, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Eigen::VectorXd point = y.point(static_cast<Eigen::Index>(i));
      double log_q;
      try {
        log_q = deformed_log_density(model, def, point);
      } catch (const SingularPoint&) {
        // zero coordinates sit on the power map's singular set; nudge off it
        for (Eigen::Index c = 0; c < point.size(); ++c) {
          if (point(c) == 0.0) point(c) = 1e-300;
        }
        log_q = deformed_log_density(model, def, point);
      }
      terms[i] = log_q - log_density(model, point);
    }
  });
  return 2.0 * pairwise_sum(terms);
}

double evaluate_metric(MetricKind metric, const DataMatrix& x,
                       const DataMatrix& y, const MetricConfig& cfg,
                       RngStream& stream) {
  switch (metric) {
    case MetricKind::SW: return sliced_wasserstein(x, y, cfg, stream);
    case MetricKind::MeanKS: return mean_ks(x, y);
    case MetricKind::SlicedKS: return sliced_ks(x, y, cfg, stream);
    case MetricKind::MMD: return mmd_unbiased(x, y);
    case MetricKind::FGD: return fgd_inf(x, y, cfg, stream);
    case MetricKind::LLR:
      throw DomainError("LLR is not a two-sample statistic; use llr()");
  }
  throw DomainError("unknown metric");
}

}  // namespace tsb
