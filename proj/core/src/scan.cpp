#include "tsb/scan.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "tsb/errors.hpp"
#include "tsb/parallel.hpp"
#include "tsb/warnings.hpp"

namespace tsb {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNoisyTolerance = 5e-2;
constexpr int kMaxDoublings = 3;

std::uint64_t eps_key(double epsilon) { return std::bit_cast<std::uint64_t>(epsilon); }

ModelInfo problem_model_info(const ScanProblem& problem) {
  if (const auto* gen = std::get_if<GeneratorProblem>(&problem.source)) {
    return model_info_of(gen->model);
  }
  const auto& ds = std::get<DatasetProblem>(problem.source);
  return standardized_model_info(ds.data.cols());
}

Deformation problem_deformation(const ScanProblem& problem, double epsilon,
                                const RngStream& scan_stream) {
  // one fixed substream, so the frozen directions are shared by every
  // epsilon probed within this scan
  return make_deformation(problem.deform, epsilon, problem_model_info(problem),
                          scan_stream.substream("deform", 0));
}

double single_alternative_statistic(const ScanProblem& problem,
                                    const Deformation& def, std::size_t rep,
                                    RngStream rep_stream) {
  if (const auto* gen = std::get_if<GeneratorProblem>(&problem.source)) {
    RngStream sx = rep_stream.substream("x", 0);
    RngStream sy = rep_stream.substream("y", 0);
    RngStream sm = rep_stream.substream("metric", 0);
    const DataMatrix y0 = sample(gen->model, problem.n, sy);
    const DataMatrix y = apply(def, y0, rep);
    if (problem.metric == MetricKind::LLR) return llr(gen->model, def, y);
    const DataMatrix x = sample(gen->model, problem.n, sx);
    return evaluate_metric(problem.metric, x, y, problem.cfg, sm);
  }

  const auto& ds = std::get<DatasetProblem>(problem.source);
  if (problem.metric == MetricKind::LLR) {
    throw DomainError("the likelihood-ratio statistic needs an analytic model");
  }
  RngStream ssplit = rep_stream.substream("split", 0);
  RngStream sa = rep_stream.substream("draw-a", 0);
  RngStream sb = rep_stream.substream("draw-b", 0);
  RngStream sm = rep_stream.substream("metric", 0);
  auto [first, second] = split_half(ds.data, ssplit);
  const DataMatrix x_raw = bootstrap_draw(first, problem.n, sa, ds.with_replacement);
  const DataMatrix y_raw = bootstrap_draw(second, problem.n, sb, ds.with_replacement);

  const DataMatrix y_deformed_std = apply(def, standardize(y_raw, ds.scale), rep);
  if (ds.scale_features) {
    const DataMatrix x_std = standardize(x_raw, ds.scale);
    return evaluate_metric(problem.metric, x_std, y_deformed_std, problem.cfg, sm);
  }
  const DataMatrix y = destandardize(y_deformed_std, ds.scale);
  return evaluate_metric(problem.metric, x_raw, y, problem.cfg, sm);
}

bool decreases_significantly(const AltEvaluation& lo, const AltEvaluation& hi) {
  const double se_lo = lo.std / std::sqrt(static_cast<double>(lo.reps));
  const double se_hi = hi.std / std::sqrt(static_cast<double>(hi.reps));
  const double slack = 2.0 * std::sqrt(se_lo * se_lo + se_hi * se_hi);
  return lo.mean > hi.mean + slack;
}

// Compares a freshly inserted evaluation against its strength neighbors
// only, so each violating pair warns once.
void check_monotonicity(const AltCache& cache, AltCache::iterator inserted,
                        int& warnings) {
  auto complain = [&](const AltEvaluation& lo, const AltEvaluation& hi) {
    ++warnings;
    warn("alternative statistic decreased from eps=" + std::to_string(lo.epsilon) +
         " to eps=" + std::to_string(hi.epsilon) +
         " by more than two standard errors; continuing on the means");
  };
  if (inserted != cache.begin()) {
    const auto prev = std::prev(inserted);
    if (decreases_significantly(prev->second, inserted->second)) {
      complain(prev->second, inserted->second);
    }
  }
  const auto next = std::next(inserted);
  if (next != cache.end() &&
      decreases_significantly(inserted->second, next->second)) {
    complain(inserted->second, next->second);
  }
}

// The cache key is the exact epsilon bit pattern: std::map orders by the
// unsigned integer value, which matches numeric order for positive doubles.
struct ScanContext {
  const ScanProblem& problem;
  const RngStream& scan_stream;
  AltCache& cache;
  int nonmonotone_warnings = 0;

  const AltEvaluation& at(double epsilon) {
    const auto key = eps_key(epsilon);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, evaluate_alternative(problem, epsilon, scan_stream)).first;
      check_monotonicity(cache, it, nonmonotone_warnings);
    }
    return it->second;
  }
};

enum class Target { MeanPlusStd, Mean, MeanMinusStd };

double target_value(const AltEvaluation& eval, Target target) {
  switch (target) {
    case Target::MeanPlusStd: return eval.mean + eval.std;
    case Target::Mean: return eval.mean;
    case Target::MeanMinusStd: return eval.mean - eval.std;
  }
  return eval.mean;
}

struct TargetCrossing {
  double eps = 0.0;
  bool converged = false;
};

// Shared skeleton for the three bracket searches. threshold_at may depend
// on epsilon (likelihood-ratio refreshes its null per probe). eps_cap
// bounds the doubling of the upper end.
TargetCrossing solve_target(ScanContext& ctx, Target target,
                            const std::function<double(double)>& threshold_at,
                            double eps_cap) {
  const double tol = ctx.problem.tolerance;
  double hi = std::min(ctx.problem.eps_max, eps_cap);

  auto value_at = [&](double eps) { return target_value(ctx.at(eps), target); };
  auto se_at = [&](double eps) {
    const AltEvaluation& eval = ctx.at(eps);
    return eval.std / std::sqrt(static_cast<double>(eval.reps));
  };

  int doublings = 0;
  while (value_at(hi) < threshold_at(hi) && doublings < kMaxDoublings &&
         hi < eps_cap) {
    hi = std::min(2.0 * hi, eps_cap);
    ++doublings;
  }
  if (value_at(hi) < threshold_at(hi)) {
    return {hi, false};  // never rejected inside the search range
  }
  const CrossingResult res =
      bisect_crossing(value_at, threshold_at, 0.0, hi, tol, kNoisyTolerance, se_at);
  return {res.eps, res.converged};
}

EpsilonBound run_scan(const ScanProblem& problem,
                      const std::function<double(double)>& threshold_at,
                      double alpha, const RngStream& scan_stream,
                      AltCache* shared_cache, double eps_cap) {
  const auto start = Clock::now();
  AltCache local;
  AltCache& cache = shared_cache ? *shared_cache : local;
  ScanContext ctx{problem, scan_stream, cache};

  // pointwise ordering mean+std >= mean >= mean-std keeps the three
  // crossings ordered: eps_low <= eps <= eps_up
  const TargetCrossing low = solve_target(ctx, Target::MeanPlusStd, threshold_at, eps_cap);
  const TargetCrossing mid = solve_target(ctx, Target::Mean, threshold_at, eps_cap);
  const TargetCrossing up = solve_target(ctx, Target::MeanMinusStd, threshold_at, eps_cap);

  EpsilonBound bound;
  bound.alpha = alpha;
  bound.eps = mid.eps;
  bound.eps_low = low.eps;
  bound.eps_up = up.eps;
  bound.converged = low.converged && mid.converged && up.converged;
  bound.nonmonotone_warnings = ctx.nonmonotone_warnings;
  bound.evaluations.reserve(cache.size());
  for (const auto& [key, eval] : cache) {
    (void)key;
    bound.evaluations.push_back(eval);
  }
  bound.elapsed_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return bound;
}

}  // namespace

AltEvaluation evaluate_alternative(const ScanProblem& problem, double epsilon,
                                   const RngStream& scan_stream) {
  if (epsilon < 0.0) throw DomainError("evaluate_alternative: epsilon >= 0 required");
  if (problem.reps < 2) throw DomainError("evaluate_alternative: reps >= 2 required");
  const Deformation def = problem_deformation(problem, epsilon, scan_stream);

  // streams keyed by (epsilon bits, rep) so a cached strength re-probed
  // later reproduces the identical evaluation
  const RngStream eps_stream = scan_stream.substream("alt", eps_key(epsilon));
  std::vector<double> stats(problem.reps);
  parallel_for(problem.reps, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t rep = begin; rep < end; ++rep) {
      stats[rep] = single_alternative_statistic(problem, def, rep,
                                                eps_stream.substream("rep", rep));
    }
  });

  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= static_cast<double>(stats.size());
  double var = 0.0;
  for (double s : stats) var += (s - mean) * (s - mean);
  var /= static_cast<double>(stats.size() - 1);

  AltEvaluation eval;
  eval.epsilon = epsilon;
  eval.mean = mean;
  eval.std = std::sqrt(var);
  eval.reps = problem.reps;
  return eval;
}

CrossingResult bisect_crossing(const std::function<double(double)>& value_at,
                               const std::function<double(double)>& threshold_at,
                               double lo, double hi, double rel_tol,
                               double noisy_rel_tol,
                               const std::function<double(double)>& se_at,
                               int max_iter) {
  if (!(hi > lo)) throw DomainError("bisect_crossing: empty bracket");
  CrossingResult result;
  bool last_noisy_ok = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double value = value_at(mid);
    const double thr = threshold_at(mid);
    const double scale = std::max(std::abs(thr), 1e-300);
    const double gap_rel = std::abs(value - thr) / scale;
    const double width_rel = (hi - lo) / std::max(std::abs(mid), 1e-300);

    result.eps = mid;
    result.gap_rel = gap_rel;
    const double se = se_at ? se_at(mid) : 0.0;
    last_noisy_ok =
        gap_rel <= noisy_rel_tol || std::abs(value - thr) <= 3.0 * se;

    if (width_rel <= rel_tol && gap_rel <= rel_tol) {
      result.converged = true;
      return result;
    }
    // once the bracket is far tighter than the tolerance the residual gap
    // is evaluation noise; accept it within the widened tolerance or
    // within three standard errors of the threshold
    if (width_rel <= 1e-2 * rel_tol) {
      result.converged = last_noisy_ok;
      return result;
    }
    if (value >= thr) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.converged = last_noisy_ok;
  return result;
}

EpsilonBound bisect_epsilon(const ScanProblem& problem,
                            const NullDistribution& null, double alpha,
                            const RngStream& scan_stream,
                            AltCache* shared_cache) {
  if (problem.metric == MetricKind::LLR) {
    throw DomainError("use bisect_epsilon_llr for the likelihood-ratio statistic");
  }
  if (null.metric != problem.metric || null.n != problem.n) {
    throw DomainError("null distribution does not match the scan problem");
  }
  const double t_alpha = threshold(null, alpha).t_alpha;
  const double cap = problem.eps_max * 8.0;
  return run_scan(problem, [t_alpha](double) { return t_alpha; }, alpha,
                  scan_stream, shared_cache, cap);
}

EpsilonBound bisect_epsilon_llr(const ScanProblem& problem,
                                std::size_t null_iters, double alpha,
                                const RngStream& scan_stream,
                                AltCache* shared_cache,
                                LlrNullCache* shared_nulls) {
  if (problem.metric != MetricKind::LLR) {
    throw DomainError("bisect_epsilon_llr expects the likelihood-ratio metric");
  }
  if (!is_bijective(problem.deform)) {
    throw NotInvertible("likelihood-ratio scans need an invertible deformation");
  }
  const auto* gen = std::get_if<GeneratorProblem>(&problem.source);
  if (!gen) throw DomainError("likelihood-ratio scans need an analytic model");

  // PowMinus loses invertibility at eps = 1; keep the bracket away from it
  const double cap = problem.deform == DeformKind::PowMinus
                         ? 1.0 - 1e-6
                         : problem.eps_max * 8.0;

  LlrNullCache local_nulls;
  LlrNullCache& nulls = shared_nulls ? *shared_nulls : local_nulls;
  auto threshold_at = [&](double epsilon) {
    const auto key = eps_key(epsilon);
    auto it = nulls.find(key);
    if (it == nulls.end()) {
      const Deformation def = problem_deformation(problem, epsilon, scan_stream);
      it = nulls
               .emplace(key, estimate_null_llr(gen->model, def, problem.n,
                                               null_iters,
                                               scan_stream.substream("llr-null", key)))
               .first;
    }
    return threshold(it->second, alpha).t_alpha;
  };
  return run_scan(problem, threshold_at, alpha, scan_stream, shared_cache, cap);
}

}  // namespace tsb
