#include "tsb/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "tsb/errors.hpp"

namespace tsb {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)

Eigen::MatrixXd json_to_matrix(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Eigen::VectorXd json_to_vector(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

double log_sum_exp(const Eigen::VectorXd& terms) {
  const double peak = terms.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i) acc += std::exp(terms(i) - peak);
  return peak + std::log(acc);
}

}  // namespace

Eigen::VectorXd MoGSpec::mixture_mean() const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < q; ++k) mu += weights(k) * means.row(k).transpose();
  return mu;
}

Eigen::MatrixXd MoGSpec::mixture_covariance() const {
  const Eigen::VectorXd mu = mixture_mean();
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::VectorXd mk = means.row(k).transpose();
    second += weights(k) * (mk * mk.transpose());
    for (Eigen::Index i = 0; i < d; ++i) {
      second(i, i) += weights(k) * stds(k, i) * stds(k, i);
    }
  }
  return second - mu * mu.transpose();
}

Eigen::MatrixXd MoGSpec::mixture_correlation() const {
  Eigen::MatrixXd cov = mixture_covariance();
  Eigen::VectorXd scale = cov.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      corr(i, j) = cov(i, j) / (scale(i) * scale(j));
  return corr;
}

MoGSpec build_mog(Eigen::Index d, Eigen::Index q, RngStream stream) {
  if (d < 1 || q < 1) throw DomainError("build_mog: d >= 1 and q >= 1 required");
  MoGSpec spec;
  spec.d = d;
  spec.q = q;
  spec.means.resize(q, d);
  spec.stds.resize(q, d);
  spec.weights.resize(q);

  RngStream s_means = stream.substream("means", 0);
  RngStream s_stds = stream.substream("stds", 0);
  RngStream s_weights = stream.substream("weights", 0);

  for (Eigen::Index k = 0; k < q; ++k)
    for (Eigen::Index c = 0; c < d; ++c) spec.means(k, c) = s_means.uniform(-5.0, 5.0);
  for (Eigen::Index k = 0; k < q; ++k)
    for (Eigen::Index c = 0; c < d; ++c) {
      double s;
      do {
        s = s_stds.uniform_pos();
      } while (s == 0.0);
      spec.stds(k, c) = s;
    }
  double total = 0.0;
  for (Eigen::Index k = 0; k < q; ++k) {
    spec.weights(k) = s_weights.uniform_pos();
    total += spec.weights(k);
  }
  spec.weights /= total;
  return spec;
}

CGSpec make_cg(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  const Eigen::Index d = mean.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    throw DimensionMismatch("make_cg: covariance shape does not match mean");
  }
  Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw FactorizationFailure("make_cg: eigendecomposition failed");
  }
  const double max_eval = eig.eigenvalues().maxCoeff();
  if (!(max_eval > 0.0)) {
    throw FactorizationFailure("make_cg: covariance has no positive eigenvalue");
  }
  const double floor = 1e-10 * max_eval;
  Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(floor);
  sym = eig.eigenvectors() * evals.asDiagonal() * eig.eigenvectors().transpose();
  sym = 0.5 * (sym + sym.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw FactorizationFailure("make_cg: Cholesky factorization failed");
  }
  CGSpec spec;
  spec.d = d;
  spec.mean = std::move(mean);
  spec.covariance = std::move(sym);
  spec.cholesky_factor = llt.matrixL();
  return spec;
}

CGSpec build_cg(Eigen::Index d, RngStream stream) {
  const auto q = static_cast<Eigen::Index>(
      std::ceil(std::sqrt(static_cast<double>(d))));
  return build_cg(d, q, stream);
}

CGSpec build_cg(Eigen::Index d, Eigen::Index mixture_q, RngStream stream) {
  if (d < 1) throw DomainError("build_cg: d >= 1 required");
  const MoGSpec mog = build_mog(d, mixture_q, stream);
  RngStream s_mean = stream.substream("cg-mean", 0);
  Eigen::VectorXd mean(d);
  for (Eigen::Index c = 0; c < d; ++c) mean(c) = s_mean.uniform(-5.0, 5.0);
  return make_cg(std::move(mean), mog.mixture_correlation());
}

DataMatrix sample(const ModelSpec& model, Eigen::Index n, RngStream& stream) {
  if (n < 1) throw DomainError("sample: n >= 1 required");
  const Eigen::Index d = dimension(model);
  DataMatrix out(n, d);

  if (const auto* mog = std::get_if<MoGSpec>(&model)) {
    Eigen::VectorXd cumulative(mog->q);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < mog->q; ++k) {
      acc += mog->weights(k);
      cumulative(k) = acc;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = stream.next_double();
      Eigen::Index k = 0;
      while (k + 1 < mog->q && u >= cumulative(k)) ++k;
      for (Eigen::Index c = 0; c < d; ++c) {
        out(i, c) = mog->means(k, c) + mog->stds(k, c) * stream.normal();
      }
    }
    return out;
  }

  const auto& cg = std::get<CGSpec>(model);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) z(c) = stream.normal();
    const Eigen::VectorXd x = cg.mean + cg.cholesky_factor * z;
    for (Eigen::Index c = 0; c < d; ++c) out(i, c) = x(c);
  }
  return out;
}

double log_density(const ModelSpec& model, const Eigen::VectorXd& point) {
  const Eigen::Index d = dimension(model);
  if (point.size() != d) {
    throw DimensionMismatch("log_density: point dimension does not match model");
  }

  if (const auto* mog = std::get_if<MoGSpec>(&model)) {
    Eigen::VectorXd comp_log(mog->q);
    for (Eigen::Index k = 0; k < mog->q; ++k) {
      double lp = std::log(mog->weights(k));
      for (Eigen::Index c = 0; c < d; ++c) {
        const double s = mog->stds(k, c);
        const double zc = (point(c) - mog->means(k, c)) / s;
        lp += -0.5 * (kLogTwoPi + zc * zc) - std::log(s);
      }
      comp_log(k) = lp;
    }
    return log_sum_exp(comp_log);
  }

  const auto& cg = std::get<CGSpec>(model);
  const Eigen::VectorXd z =
      cg.cholesky_factor.triangularView<Eigen::Lower>().solve(point - cg.mean);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) log_det += std::log(cg.cholesky_factor(i, i));
  return -0.5 * (static_cast<double>(d) * kLogTwoPi + z.squaredNorm()) - log_det;
}

Eigen::Index dimension(const ModelSpec& model) {
  return std::visit([](const auto& m) { return m.d; }, model);
}

Eigen::VectorXd model_mean(const ModelSpec& model) {
  if (const auto* mog = std::get_if<MoGSpec>(&model)) return mog->mixture_mean();
  return std::get<CGSpec>(model).mean;
}

Eigen::VectorXd model_marginal_std(const ModelSpec& model) {
  if (const auto* mog = std::get_if<MoGSpec>(&model)) {
    return mog->mixture_covariance().diagonal().cwiseSqrt();
  }
  return std::get<CGSpec>(model).covariance.diagonal().cwiseSqrt();
}

std::string model_to_json(const ModelSpec& model) {
  nlohmann::json j;
  if (const auto* mog = std::get_if<MoGSpec>(&model)) {
    j["family"] = "mog";
    j["d"] = mog->d;
    j["q"] = mog->q;
    j["means"] = matrix_to_json(mog->means);
    j["stds"] = matrix_to_json(mog->stds);
    j["weights"] = vector_to_json(mog->weights);
  } else {
    const auto& cg = std::get<CGSpec>(model);
    j["family"] = "cg";
    j["d"] = cg.d;
    j["mean"] = vector_to_json(cg.mean);
    j["covariance"] = matrix_to_json(cg.covariance);
    j["cholesky_factor"] = matrix_to_json(cg.cholesky_factor);
  }
  return j.dump();
}

ModelSpec model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  const std::string family = j.at("family").get<std::string>();
  if (family == "mog") {
    MoGSpec spec;
    spec.d = j.at("d").get<Eigen::Index>();
    spec.q = j.at("q").get<Eigen::Index>();
    spec.means = json_to_matrix(j.at("means"));
    spec.stds = json_to_matrix(j.at("stds"));
    spec.weights = json_to_vector(j.at("weights"));
    if (spec.means.rows() != spec.q || spec.means.cols() != spec.d ||
        spec.stds.rows() != spec.q || spec.stds.cols() != spec.d ||
        spec.weights.size() != spec.q) {
      throw ParseError("model JSON: mog field shapes inconsistent");
    }
    if (std::abs(spec.weights.sum() - 1.0) > 1e-12 || spec.stds.minCoeff() <= 0.0) {
      throw ParseError("model JSON: mog invariants violated");
    }
    return spec;
  }
  if (family == "cg") {
    Eigen::VectorXd mean = json_to_vector(j.at("mean"));
    Eigen::MatrixXd cov = json_to_matrix(j.at("covariance"));
    return make_cg(std::move(mean), std::move(cov));
  }
  throw ParseError("model JSON: unknown family '" + family + "'");
}

}  // namespace tsb
