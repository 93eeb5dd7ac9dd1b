#include "tsb/deformations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsb/errors.hpp"

namespace tsb {

namespace {

void check_dimension(const Deformation& def, Eigen::Index d) {
  if (def.d != d) {
    throw DimensionMismatch("deformation dimension does not match data");
  }
}

// Partial Fisher-Yates: leaves a uniform k-subset of [0, n) in random
// order at the front of the returned index array.
std::vector<std::uint32_t> choose_rows(Eigen::Index n, Eigen::Index k,
                                       RngStream& stream) {
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0u);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           stream.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

void shuffle_values(std::vector<double>& vals, RngStream& stream) {
  for (std::size_t i = vals.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next_below(i));
    std::swap(vals[i - 1], vals[j]);
  }
}

// Shuffle a fraction of each feature column independently of the others.
void partial_shuffle(DataMatrix& m, double fraction, std::uint64_t iteration,
                     const RngStream& base) {
  const Eigen::Index n = m.rows();
  const auto k = static_cast<Eigen::Index>(
      std::floor(fraction * static_cast<double>(n)));
  if (k < 2) return;  // nothing to permute
  RngStream it_stream = base.substream("shuffle", iteration);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    RngStream fs = it_stream.substream("feature", static_cast<std::uint64_t>(c));
    const auto rows = choose_rows(n, k, fs);
    std::vector<double> vals(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = m(rows[i], c);
    shuffle_values(vals, fs);
    for (std::size_t i = 0; i < rows.size(); ++i) m(rows[i], c) = vals[i];
  }
}

double signed_pow(double x, double exponent) {
  if (x == 0.0) return 0.0;
  const double mag = std::pow(std::abs(x), exponent);
  return x < 0.0 ? -mag : mag;
}

void require_bijective(const Deformation& def) {
  if (!is_bijective(def.kind)) {
    throw NotInvertible(std::string(to_string(def.kind)) +
                        " deformation has no inverse");
  }
  if (def.kind == DeformKind::PowMinus && def.epsilon >= 1.0) {
    throw NotInvertible("PowMinus is invertible only for epsilon < 1");
  }
}

}  // namespace

const char* to_string(DeformKind kind) {
  switch (kind) {
    case DeformKind::Mu: return "mu";
    case DeformKind::SigmaDiag: return "sigma_diag";
    case DeformKind::SigmaOffDiag: return "sigma_offdiag";
    case DeformKind::PowPlus: return "pow_plus";
    case DeformKind::PowMinus: return "pow_minus";
    case DeformKind::NoiseNormal: return "noise_normal";
    case DeformKind::NoiseUniform: return "noise_uniform";
  }
  return "?";
}

std::optional<DeformKind> deform_kind_from_string(std::string_view name) {
  if (name == "mu") return DeformKind::Mu;
  if (name == "sigma_diag") return DeformKind::SigmaDiag;
  if (name == "sigma_offdiag") return DeformKind::SigmaOffDiag;
  if (name == "pow_plus") return DeformKind::PowPlus;
  if (name == "pow_minus") return DeformKind::PowMinus;
  if (name == "noise_normal") return DeformKind::NoiseNormal;
  if (name == "noise_uniform") return DeformKind::NoiseUniform;
  return std::nullopt;
}

bool is_bijective(DeformKind kind) {
  switch (kind) {
    case DeformKind::Mu:
    case DeformKind::SigmaDiag:
    case DeformKind::PowPlus:
    case DeformKind::PowMinus:
      return true;
    default:
      return false;
  }
}

ModelInfo model_info_of(const ModelSpec& model) {
  return ModelInfo{model_mean(model), model_marginal_std(model)};
}

ModelInfo standardized_model_info(Eigen::Index d) {
  return ModelInfo{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

Deformation make_deformation(DeformKind kind, double epsilon,
                             const ModelInfo& info, RngStream stream) {
  if (epsilon < 0.0) throw DomainError("make_deformation: epsilon >= 0 required");
  const Eigen::Index d = info.mean.size();
  if (d < 1) throw DimensionMismatch("make_deformation: empty model info");

  Deformation def;
  def.kind = kind;
  def.epsilon = epsilon;
  def.d = d;
  def.model_mean = info.mean;
  def.model_std = info.std;
  def.deform_stream = stream.substream("draws", 0);

  if (kind == DeformKind::Mu) {
    RngStream s = stream.substream("mu-dirs", 0);
    def.frozen_mu_dirs.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) def.frozen_mu_dirs(c) = s.uniform(-1.0, 1.0);
    def.mu_shift = epsilon * def.frozen_mu_dirs;
  }
  if (kind == DeformKind::SigmaDiag || kind == DeformKind::SigmaOffDiag) {
    RngStream s = stream.substream("sigma-dirs", 0);
    def.frozen_sigma_dirs.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) def.frozen_sigma_dirs(c) = s.next_double();
    const double scale_eps =
        kind == DeformKind::SigmaDiag ? epsilon : std::max(0.0, epsilon - 1.0);
    def.sigma_scale = Eigen::VectorXd::Ones(d) + scale_eps * def.frozen_sigma_dirs;
  }
  return def;
}

DataMatrix apply(const Deformation& def, const DataMatrix& x,
                 std::uint64_t iteration) {
  check_dimension(def, x.cols());
  DataMatrix y = x;
  if (def.epsilon == 0.0) return y;

  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  switch (def.kind) {
    case DeformKind::Mu:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) y(i, c) += def.mu_shift(c);
      break;

    case DeformKind::SigmaDiag:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c)
          y(i, c) = def.model_mean(c) +
                    def.sigma_scale(c) * (x(i, c) - def.model_mean(c));
      break;

    case DeformKind::SigmaOffDiag: {
      const double fraction = std::min(def.epsilon, 1.0);
      partial_shuffle(y, fraction, iteration, def.deform_stream);
      if (def.epsilon > 1.0) {
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index c = 0; c < d; ++c)
            y(i, c) = def.model_mean(c) +
                      def.sigma_scale(c) * (y(i, c) - def.model_mean(c));
      }
      break;
    }

    case DeformKind::PowPlus:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c)
          y(i, c) = signed_pow(x(i, c), 1.0 + def.epsilon);
      break;

    case DeformKind::PowMinus:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c)
          y(i, c) = signed_pow(x(i, c), 1.0 - def.epsilon);
      break;

    case DeformKind::NoiseNormal: {
      RngStream s = def.deform_stream.substream("noise", iteration);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) y(i, c) += def.epsilon * s.normal();
      break;
    }

    case DeformKind::NoiseUniform: {
      RngStream s = def.deform_stream.substream("noise", iteration);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c)
          y(i, c) += s.uniform(-def.epsilon, def.epsilon);
      break;
    }
  }
  return y;
}

Eigen::VectorXd inverse(const Deformation& def, const Eigen::VectorXd& y) {
  require_bijective(def);
  check_dimension(def, y.size());
  Eigen::VectorXd x(y.size());
  switch (def.kind) {
    case DeformKind::Mu:
      x = y - def.mu_shift;
      break;
    case DeformKind::SigmaDiag:
      for (Eigen::Index c = 0; c < y.size(); ++c)
        x(c) = def.model_mean(c) + (y(c) - def.model_mean(c)) / def.sigma_scale(c);
      break;
    case DeformKind::PowPlus:
      for (Eigen::Index c = 0; c < y.size(); ++c)
        x(c) = signed_pow(y(c), 1.0 / (1.0 + def.epsilon));
      break;
    case DeformKind::PowMinus:
      for (Eigen::Index c = 0; c < y.size(); ++c)
        x(c) = signed_pow(y(c), 1.0 / (1.0 - def.epsilon));
      break;
    default:
      break;  // unreachable, require_bijective throws
  }
  return x;
}

double log_abs_det_jacobian(const Deformation& def, const Eigen::VectorXd& x) {
  require_bijective(def);
  check_dimension(def, x.size());
  switch (def.kind) {
    case DeformKind::Mu:
      return 0.0;
    case DeformKind::SigmaDiag: {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < x.size(); ++c) acc += std::log(def.sigma_scale(c));
      return acc;
    }
    case DeformKind::PowPlus:
    case DeformKind::PowMinus: {
      const double sgn = def.kind == DeformKind::PowPlus ? 1.0 : -1.0;
      const double base = std::log1p(sgn * def.epsilon);
      double acc = 0.0;
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        const double mag = std::abs(x(c));
        if (mag == 0.0) {
          throw SingularPoint("power deformation Jacobian diverges at x = 0");
        }
        acc += base + sgn * def.epsilon * std::log(mag);
      }
      return acc;
    }
    default:
      return 0.0;  // unreachable
  }
}

double deformed_log_density(const ModelSpec& model, const Deformation& def,
                            const Eigen::VectorXd& y) {
  const Eigen::VectorXd x = inverse(def, y);
  return log_density(model, x) - log_abs_det_jacobian(def, x);
}

std::string deformation_to_json(const Deformation& def) {
  nlohmann::json j;
  j["kind"] = to_string(def.kind);
  j["epsilon"] = def.epsilon;
  j["d"] = def.d;
  j["stream"] = {{"master_seed", def.deform_stream.master_seed()},
                 {"label", def.deform_stream.label()},
                 {"index", def.deform_stream.index()}};
  auto to_array = [](const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  if (def.frozen_mu_dirs.size() > 0) j["frozen_mu_dirs"] = to_array(def.frozen_mu_dirs);
  if (def.frozen_sigma_dirs.size() > 0) {
    j["frozen_sigma_dirs"] = to_array(def.frozen_sigma_dirs);
  }
  return j.dump();
}

}  // namespace tsb
