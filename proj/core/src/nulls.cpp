#include "tsb/nulls.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tsb/dataio.hpp"
#include "tsb/errors.hpp"
#include "tsb/parallel.hpp"
#include "tsb/warnings.hpp"

namespace tsb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void sort_with_origin(NullDistribution& null, std::vector<double> raw) {
  const std::size_t iters = raw.size();
  std::vector<std::uint32_t> order(iters);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return raw[a] < raw[b];
  });
  null.values.resize(iters);
  null.origin_iteration.resize(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    null.values[i] = raw[order[i]];
    null.origin_iteration[i] = order[i];
  }
  null.iterations = iters;
}

// Wichura's AS241 rational approximation of the standard normal quantile.
double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  if (r <= 0.0) return q < 0.0 ? -39.0 : 39.0;  // argument at the double limit
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                  0.24178072517745061177) * r + 1.27045825245236838258) * r +
                3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

std::size_t count_at_or_above(const std::vector<double>& sorted, double t) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<std::size_t>(sorted.end() - it);
}

}  // namespace

NullDistribution estimate_null_generator(const ModelSpec& model,
                                         MetricKind metric,
                                         const MetricConfig& cfg,
                                         Eigen::Index n, std::size_t iters,
                                         const RngStream& stream) {
  if (metric == MetricKind::LLR) {
    throw DomainError("use estimate_null_llr for the likelihood-ratio statistic");
  }
  if (n < 2) throw TooFewPoints("estimate_null_generator: n >= 2 required");
  if (iters < 1) throw DomainError("estimate_null_generator: iters >= 1 required");

  const auto start = Clock::now();
  std::vector<double> raw(iters);
  parallel_for(iters, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream it = stream.substream("null-iter", i);
      RngStream sx = it.substream("x", 0);
      RngStream sy = it.substream("y", 0);
      RngStream sm = it.substream("metric", 0);
      const DataMatrix x = sample(model, n, sx);
      const DataMatrix y = sample(model, n, sy);
      raw[i] = evaluate_metric(metric, x, y, cfg, sm);
    }
  });

  NullDistribution null;
  null.metric = metric;
  null.n = n;
  null.m = n;
  null.source = NullSource::Generator;
  sort_with_origin(null, std::move(raw));
  null.elapsed_seconds = seconds_since(start);
  return null;
}

NullDistribution estimate_null_bootstrap(const DataMatrix& dataset,
                                         MetricKind metric,
                                         const MetricConfig& cfg,
                                         Eigen::Index n, std::size_t iters,
                                         const RngStream& stream,
                                         bool with_replacement) {
  if (metric == MetricKind::LLR) {
    throw DomainError("the likelihood-ratio statistic has no bootstrap null");
  }
  if (dataset.rows() < 2) throw TooFewPoints("bootstrap null: dataset too small");
  if (iters < 1) throw DomainError("estimate_null_bootstrap: iters >= 1 required");

  const auto start = Clock::now();
  std::vector<double> raw(iters);
  parallel_for(iters, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream it = stream.substream("boot-iter", i);
      RngStream ssplit = it.substream("split", 0);
      RngStream sa = it.substream("draw-a", 0);
      RngStream sb = it.substream("draw-b", 0);
      RngStream sm = it.substream("metric", 0);
      auto [first, second] = split_half(dataset, ssplit);
      const DataMatrix x = bootstrap_draw(first, n, sa, with_replacement);
      const DataMatrix y = bootstrap_draw(second, n, sb, with_replacement);
      raw[i] = evaluate_metric(metric, x, y, cfg, sm);
    }
  });

  NullDistribution null;
  null.metric = metric;
  null.n = n;
  null.m = n;
  null.source = NullSource::Bootstrap;
  sort_with_origin(null, std::move(raw));
  null.elapsed_seconds = seconds_since(start);
  return null;
}

NullDistribution estimate_null_llr(const ModelSpec& model,
                                   const Deformation& def, Eigen::Index m,
                                   std::size_t iters, const RngStream& stream) {
  if (!is_bijective(def.kind)) {
    throw NotInvertible("likelihood-ratio null needs an invertible deformation");
  }
  if (iters < 1) throw DomainError("estimate_null_llr: iters >= 1 required");

  const auto start = Clock::now();
  std::vector<double> raw(iters);
  parallel_for(iters, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream it = stream.substream("llr-null-iter", i);
      const DataMatrix y = sample(model, m, it);
      raw[i] = llr(model, def, y);
    }
  });

  NullDistribution null;
  null.metric = MetricKind::LLR;
  null.n = m;
  null.m = m;
  null.source = NullSource::Generator;
  null.epsilon = def.epsilon;
  sort_with_origin(null, std::move(raw));
  null.elapsed_seconds = seconds_since(start);
  return null;
}

CLThreshold threshold(const NullDistribution& null, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("threshold: alpha must be in (0, 1)");
  }
  const std::size_t iters = null.iterations;
  if (iters == 0) throw TooFewPoints("threshold: empty null distribution");
  if (static_cast<double>(iters) < 1.0 / alpha) {
    warn("threshold: fewer than 1/alpha null values; the tail is unresolved");
  } else if (static_cast<double>(iters) * alpha < 10.0) {
    warn("threshold: fewer than 10 null values above the requested level");
  }

  const auto allowed =
      static_cast<std::size_t>(std::floor(alpha * static_cast<double>(iters)));
  const auto& v = null.values;
  if (allowed == 0) return {alpha, v.back()};

  // first position whose value starts a tail of at most `allowed` entries
  std::size_t k = iters - allowed;
  if (k > 0 && v[k - 1] == v[k]) {
    const auto it = std::upper_bound(v.begin(), v.end(), v[k]);
    if (it == v.end()) return {alpha, v.back()};
    k = static_cast<std::size_t>(it - v.begin());
  }
  return {alpha, v[k]};
}

double p_value(const NullDistribution& null, double t_obs) {
  const double hits = static_cast<double>(count_at_or_above(null.values, t_obs));
  return (1.0 + hits) / (1.0 + static_cast<double>(null.iterations));
}

double z_score(double p) {
  if (!(p > 0.0)) throw DomainError("z_score: p must be positive");
  if (p > 1.0) throw DomainError("z_score: p must be at most 1");
  const double z = normal_quantile(1.0 - p);
  return std::clamp(z, -38.0, 38.0);
}

void save_null(const NullDistribution& null, const std::filesystem::path& csv_path,
               const std::filesystem::path& meta_path) {
  {
    std::ofstream os(csv_path);
    if (!os) throw ParseError("cannot write " + csv_path.string());
    os << "iteration,value\n";
    char buf[32];
    for (std::size_t i = 0; i < null.values.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), null.values[i]);
      os << null.origin_iteration[i] << ',' << std::string_view(buf, res.ptr - buf)
         << '\n';
    }
  }
  nlohmann::json meta;
  meta["iterations"] = null.iterations;
  meta["metric"] = to_string(null.metric);
  meta["n"] = null.n;
  meta["m"] = null.m;
  meta["source"] = null.source == NullSource::Generator ? "generator" : "bootstrap";
  if (null.epsilon) meta["epsilon"] = *null.epsilon;
  meta["elapsed_seconds"] = null.elapsed_seconds;
  std::ofstream os(meta_path);
  if (!os) throw ParseError("cannot write " + meta_path.string());
  os << meta.dump(2) << '\n';
}

NullDistribution load_null(const std::filesystem::path& csv_path,
                           const std::filesystem::path& meta_path) {
  NullDistribution null;
  {
    std::ifstream is(meta_path);
    if (!is) throw ParseError("cannot open " + meta_path.string());
    nlohmann::json meta;
    try {
      is >> meta;
      null.iterations = meta.at("iterations").get<std::size_t>();
      const auto metric = metric_kind_from_string(meta.at("metric").get<std::string>());
      if (!metric) throw ParseError("unknown metric in " + meta_path.string());
      null.metric = *metric;
      null.n = meta.at("n").get<Eigen::Index>();
      null.m = meta.at("m").get<Eigen::Index>();
      null.source = meta.at("source").get<std::string>() == "bootstrap"
                        ? NullSource::Bootstrap
                        : NullSource::Generator;
      if (meta.contains("epsilon")) null.epsilon = meta.at("epsilon").get<double>();
      null.elapsed_seconds = meta.value("elapsed_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
  }
  std::ifstream is(csv_path);
  if (!is) throw ParseError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(is, line) || line != "iteration,value") {
    throw ParseError(csv_path.string() + ": bad header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(csv_path.string() + ": bad row");
    std::uint32_t iter = 0;
    double value = 0.0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, iter);
    auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), value);
    if (r1.ec != std::errc{} || r2.ec != std::errc{}) {
      throw ParseError(csv_path.string() + ": bad row '" + line + "'");
    }
    null.origin_iteration.push_back(iter);
    null.values.push_back(value);
  }
  if (null.values.size() != null.iterations) {
    throw ParseError(csv_path.string() + ": value count does not match metadata");
  }
  if (!std::is_sorted(null.values.begin(), null.values.end())) {
    throw ParseError(csv_path.string() + ": values are not sorted");
  }
  return null;
}

}  // namespace tsb
