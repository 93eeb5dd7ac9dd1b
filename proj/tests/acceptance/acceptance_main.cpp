// Acceptance suite: one numbered criterion per function, each printing a
// single [PASS]/[FAIL] line. Run with no arguments for the full suite or
// with a criterion number to run one.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tsb/dataio.hpp"
#include "tsb/deformations.hpp"
#include "tsb/kolmogorov.hpp"
#include "tsb/models.hpp"
#include "tsb/nulls.hpp"
#include "tsb/parallel.hpp"
#include "tsb/scan.hpp"
#include "tsb/statistics.hpp"
#include "tsb/warnings.hpp"

#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tsb;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// 1. Library statistics against naive reference implementations.
Outcome criterion_oracle_equivalence() {
  RngStream s(1001, "acc-oracles", 0);
  double worst = 0.0;
  auto track = [&](double fast, double slow) {
    const double scale = std::max({std::abs(fast), std::abs(slow), 1e-30});
    worst = std::max(worst, std::abs(fast - slow) / scale);
  };

  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<Eigen::Index>(2 + s.next_below(49));
    const auto m = static_cast<Eigen::Index>(2 + s.next_below(49));
    const auto d = static_cast<Eigen::Index>(1 + s.next_below(5));

    const DataMatrix x = oracles::random_matrix(n, d, s);
    const DataMatrix y = oracles::random_matrix(m, d, s);
    track(mmd_unbiased(x, y), oracles::mmd_triple_loop(x, y));
    track(ks_1d(SortedSample(x.column(0)), SortedSample(y.column(0))),
          oracles::ks_grid_sup(x.column(0), y.column(0)));

    const DataMatrix y_eq = oracles::random_matrix(n, 1, s);
    track(wasserstein_1d_sorted(SortedSample(x.column(0)), SortedSample(y_eq.column(0))),
          oracles::w1_ecdf_integral(x.column(0), y_eq.column(0)));

    const Eigen::MatrixXd a = oracles::random_spd(d, s);
    const Eigen::MatrixXd b = oracles::random_spd(d, s);
    track(trace_sqrt_product(a, b), oracles::trace_sqrt_nonsymmetric(a, b));
  }
  return {worst < 1e-8, "max relative error " + fmt(worst) + " over 200 instances"};
}

// 2. The scaled KS null in one dimension follows the Kolmogorov law.
Outcome criterion_kolmogorov_asymptotics() {
  RngStream ms(1002, "acc-model", 0);
  const ModelSpec model = build_cg(1, ms);
  MetricConfig cfg;
  const NullDistribution null = estimate_null_generator(
      model, MetricKind::MeanKS, cfg, 10000, 10000, RngStream(1002, "acc-null", 0));

  double sup = 0.0;
  const auto count = static_cast<double>(null.values.size());
  for (std::size_t i = 0; i < null.values.size(); ++i) {
    const double f = kolmogorov_cdf(null.values[i]);
    const double hi = static_cast<double>(i + 1) / count;
    const double lo = static_cast<double>(i) / count;
    sup = std::max({sup, std::abs(hi - f), std::abs(lo - f)});
  }
  return {sup < 0.03, "sup distance to the Kolmogorov cdf " + fmt(sup)};
}

// 3. Unbiasedness of the kernel discrepancy and the extrapolated Gaussian
//    distance on same-distribution pairs.
Outcome criterion_unbiasedness() {
  RngStream ms(1003, "acc-model", 0);
  const ModelSpec model = build_cg(5, ms);
  MetricConfig cfg;
  const std::size_t reps = 10000;
  const Eigen::Index n = 100;

  std::vector<double> mmd_values(reps), fgd_fin(reps), fgd_ext(reps);
  parallel_for(reps, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream it(1003, "acc-pairs", i);
      RngStream a = it.substream("a", 0);
      RngStream b = it.substream("b", 0);
      RngStream draws = it.substream("draws", 0);
      const DataMatrix x = sample(model, n, a);
      const DataMatrix y = sample(model, n, b);
      mmd_values[i] = mmd_unbiased(x, y);
      fgd_fin[i] = fgd_finite(x, y);
      fgd_ext[i] = fgd_inf(x, y, cfg, draws);
    }
  });

  const auto mmd_stats = oracles::mean_std(mmd_values);
  const bool mmd_ok = std::abs(mmd_stats.mean) < 3.0 * mmd_stats.se;

  // bias comparison: finite-size replication mean against the magnitude
  // of the extrapolated replication mean
  const auto fin_stats = oracles::mean_std(fgd_fin);
  const auto ext_stats = oracles::mean_std(fgd_ext);
  const bool fgd_ok = fin_stats.mean > 5.0 * std::abs(ext_stats.mean);

  return {mmd_ok && fgd_ok,
          "kernel discrepancy mean " + fmt(mmd_stats.mean) + " (se " +
              fmt(mmd_stats.se) + "); finite bias " + fmt(fin_stats.mean) +
              " vs extrapolated " + fmt(ext_stats.mean)};
}

// 4. Deformation identities, inverses, Jacobians, marginal preservation.
Outcome criterion_deformations() {
  RngStream s(1004, "acc-deform", 0);
  ModelInfo info;
  info.mean = Eigen::VectorXd::Zero(4);
  info.std = Eigen::VectorXd::Ones(4);
  const DataMatrix x = oracles::random_matrix(200, 4, s);

  const DeformKind all[] = {DeformKind::Mu,          DeformKind::SigmaDiag,
                            DeformKind::SigmaOffDiag, DeformKind::PowPlus,
                            DeformKind::PowMinus,     DeformKind::NoiseNormal,
                            DeformKind::NoiseUniform};
  for (DeformKind kind : all) {
    const Deformation def =
        make_deformation(kind, 0.0, info, RngStream(1004, "d", 0));
    if (apply(def, x, 3).values() != x.values()) {
      return {false, std::string("identity failed for ") + to_string(kind)};
    }
  }

  double worst_round = 0.0;
  for (DeformKind kind : {DeformKind::Mu, DeformKind::SigmaDiag, DeformKind::PowPlus,
                          DeformKind::PowMinus}) {
    for (double eps : {0.05, 0.2, 0.6, 0.95}) {
      const Deformation def =
          make_deformation(kind, eps, info, RngStream(1004, "d", 1));
      const DataMatrix y = apply(def, x, 0);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd back = inverse(def, y.point(r));
        for (Eigen::Index c = 0; c < 4; ++c) {
          worst_round = std::max(worst_round, std::abs(back(c) - x(r, c)) /
                                                  (1.0 + std::abs(x(r, c))));
        }
      }
    }
  }
  if (worst_round >= 1e-9) {
    return {false, "round-trip error " + fmt(worst_round)};
  }

  ModelInfo info1;
  info1.mean = Eigen::VectorXd::Zero(1);
  info1.std = Eigen::VectorXd::Ones(1);
  double worst_jac = 0.0;
  for (DeformKind kind : {DeformKind::Mu, DeformKind::SigmaDiag, DeformKind::PowPlus,
                          DeformKind::PowMinus}) {
    const Deformation def = make_deformation(kind, 0.3, info1, RngStream(1004, "d", 2));
    auto forward = [&](double u) {
      DataMatrix m(1, 1);
      m(0, 0) = u;
      return apply(def, m, 0)(0, 0);
    };
    for (double point : {-2.0, -0.5, 0.5, 2.0}) {
      Eigen::VectorXd xv(1);
      xv << point;
      const double numeric =
          std::log(std::abs(oracles::central_difference(forward, point, 1e-6)));
      worst_jac = std::max(worst_jac,
                           std::abs(log_abs_det_jacobian(def, xv) - numeric));
    }
  }
  if (worst_jac >= 1e-6) {
    return {false, "jacobian error " + fmt(worst_jac)};
  }

  for (double eps : {0.3, 0.8, 1.0}) {
    const Deformation def =
        make_deformation(DeformKind::SigmaOffDiag, eps, info, RngStream(1004, "d", 3));
    const DataMatrix y = apply(def, x, 9);
    for (Eigen::Index c = 0; c < 4; ++c) {
      auto xs = x.column(c);
      auto ys = y.column(c);
      std::sort(xs.begin(), xs.end());
      std::sort(ys.begin(), ys.end());
      if (xs != ys) {
        return {false, "marginal multiset changed under the shuffle"};
      }
    }
  }
  return {true, "identity, round trips (" + fmt(worst_round) + "), jacobians (" +
                    fmt(worst_jac) + "), marginal preservation"};
}

// 5. Desk-scale reproduction of the shift-deformation transport bound.
Outcome criterion_paper_spot() {
  RngStream ms(1005, "acc-model", 0);
  const ModelSpec model = build_cg(20, ms);
  MetricConfig cfg;

  ScanProblem problem;
  problem.source = GeneratorProblem{model};
  problem.deform = DeformKind::Mu;
  problem.metric = MetricKind::SW;
  problem.cfg = cfg;
  problem.n = 50000;
  problem.reps = 50;
  problem.eps_max = 2.0;
  problem.tolerance = 1e-2;

  const NullDistribution null = estimate_null_generator(
      model, MetricKind::SW, cfg, problem.n, 1000, RngStream(1005, "acc-null", 0));
  const EpsilonBound bound =
      bisect_epsilon(problem, null, 0.05, RngStream(1005, "acc-scan", 0));

  const bool ok = bound.converged && bound.eps >= 0.028 && bound.eps <= 0.072;
  return {ok, "eps95 = " + fmt(bound.eps) + " (band [0.028, 0.072], converged=" +
                  (bound.converged ? "yes" : "no") + ")"};
}

// 6. The marginal KS average is blind to correlation-only deformations.
Outcome criterion_blindness() {
  RngStream ms(1006, "acc-model", 0);
  const ModelSpec model = build_cg(20, ms);
  MetricConfig cfg;

  ScanProblem problem;
  problem.source = GeneratorProblem{model};
  problem.deform = DeformKind::SigmaOffDiag;
  problem.metric = MetricKind::MeanKS;
  problem.cfg = cfg;
  problem.n = 50000;
  problem.reps = 50;
  problem.eps_max = 2.0;
  problem.tolerance = 1e-2;

  const NullDistribution null = estimate_null_generator(
      model, MetricKind::MeanKS, cfg, problem.n, 1000, RngStream(1006, "acc-null", 0));
  const EpsilonBound bound =
      bisect_epsilon(problem, null, 0.05, RngStream(1006, "acc-scan", 0));

  return {bound.eps > 1.0, "eps95 = " + fmt(bound.eps) + " (must exceed 1)"};
}

// 7. The likelihood ratio dominates the transport statistic on shifts.
Outcome criterion_llr_dominance() {
  RngStream ms(1007, "acc-model", 0);
  const ModelSpec model = build_cg(5, ms);
  MetricConfig cfg;

  ScanProblem sw_problem;
  sw_problem.source = GeneratorProblem{model};
  sw_problem.deform = DeformKind::Mu;
  sw_problem.metric = MetricKind::SW;
  sw_problem.cfg = cfg;
  sw_problem.n = 10000;
  sw_problem.reps = 50;
  sw_problem.eps_max = 2.0;
  sw_problem.tolerance = 1e-2;

  const NullDistribution null = estimate_null_generator(
      model, MetricKind::SW, cfg, sw_problem.n, 1000, RngStream(1007, "acc-null", 0));
  const EpsilonBound sw_bound =
      bisect_epsilon(sw_problem, null, 0.05, RngStream(1007, "acc-scan-sw", 0));

  ScanProblem llr_problem = sw_problem;
  llr_problem.metric = MetricKind::LLR;
  const EpsilonBound llr_bound =
      bisect_epsilon_llr(llr_problem, 1000, 0.05, RngStream(1007, "acc-scan-llr", 0));

  const bool ok = sw_bound.converged && llr_bound.converged &&
                  llr_bound.eps < sw_bound.eps;
  return {ok, "eps95(llr) = " + fmt(llr_bound.eps) + " vs eps95(sw) = " +
                  fmt(sw_bound.eps) + " (converged " +
                  (sw_bound.converged ? "yes" : "no") + "/" +
                  (llr_bound.converged ? "yes" : "no") + ")"};
}

// 8. The command-line scan is byte-identical across thread counts.
Outcome criterion_cli_determinism() {
  const fs::path base = fs::temp_directory_path() / "tsb_acceptance_cli";
  fs::remove_all(base);
  fs::create_directories(base);

  const fs::path config = base / "smoke.json";
  {
    std::ofstream os(config);
    os << R"({
  "version": 1,
  "master_seed": 777001,
  "source": {"type": "model", "family": "cg", "d": 5},
  "metrics": [{"kind": "sw", "slices": 16}, {"kind": "mean_ks"}],
  "deformations": ["mu", "noise_uniform"],
  "sample_sizes": [1000],
  "alphas": [0.05, 0.01],
  "null_iterations": 200,
  "reps": 20,
  "tolerance": 0.01,
  "eps_max": 2.0,
  "output_dir": "unused"
})";
  }

  auto run = [&](const std::string& tag, const std::string& threads) {
    const fs::path out = base / tag;
    std::ostringstream cmd;
    cmd << "TSTBENCH_CACHE=" << (out / "cache").string() << " " << TSTBENCH_BIN
        << " scan " << config.string() << " --threads " << threads << " --output "
        << out.string() << " > " << (base / (tag + ".log")).string() << " 2>&1";
    return std::system(cmd.str().c_str());
  };

  if (run("t1", "1") != 0) return {false, "first run failed"};
  if (run("t2", "2") != 0) return {false, "second run failed"};

  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), {});
  };
  const std::string r1 = slurp(base / "t1" / "results.csv");
  const std::string r2 = slurp(base / "t2" / "results.csv");
  const bool ok = !r1.empty() && r1 == r2;
  fs::remove_all(base);
  return {ok, ok ? "results.csv byte-identical for --threads 1 and 2"
                 : "results.csv differs between thread counts"};
}

// 9. p-values of fresh null draws are uniform for every statistic.
Outcome criterion_null_calibration() {
  RngStream ms(1009, "acc-model", 0);
  const ModelSpec model = build_cg(3, ms);
  MetricConfig cfg;
  cfg.slices = 25;
  const Eigen::Index n = 256;
  const std::size_t null_iters = 10000;
  const std::size_t fresh = 500;

  const MetricKind metrics[] = {MetricKind::SW, MetricKind::MeanKS,
                                MetricKind::SlicedKS, MetricKind::MMD,
                                MetricKind::FGD, MetricKind::LLR};
  std::string detail;
  bool all_ok = true;

  for (MetricKind metric : metrics) {
    std::vector<double> pvals(fresh);
    if (metric == MetricKind::LLR) {
      const Deformation def = make_deformation(
          DeformKind::Mu, 0.25, model_info_of(model), RngStream(1009, "acc-def", 0));
      const NullDistribution null = estimate_null_llr(
          model, def, n, null_iters, RngStream(1009, "acc-null-llr", 0));
      parallel_for(fresh, 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          RngStream it(1009, "acc-fresh-llr", i);
          const DataMatrix y = sample(model, n, it);
          pvals[i] = p_value(null, llr(model, def, y));
        }
      });
    } else {
      const NullDistribution null = estimate_null_generator(
          model, metric, cfg, n, null_iters,
          RngStream(1009, std::string("acc-null-") + to_string(metric), 0));
      parallel_for(fresh, 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          RngStream it(1009, std::string("acc-fresh-") + to_string(metric), i);
          RngStream a = it.substream("a", 0);
          RngStream b = it.substream("b", 0);
          RngStream sm = it.substream("metric", 0);
          const DataMatrix x = sample(model, n, a);
          const DataMatrix y = sample(model, n, b);
          pvals[i] = p_value(null, evaluate_metric(metric, x, y, cfg, sm));
        }
      });
    }

    std::sort(pvals.begin(), pvals.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < fresh; ++i) {
      const double hi = static_cast<double>(i + 1) / static_cast<double>(fresh);
      const double lo = static_cast<double>(i) / static_cast<double>(fresh);
      ks = std::max({ks, std::abs(hi - pvals[i]), std::abs(lo - pvals[i])});
    }
    if (!detail.empty()) detail += ", ";
    detail += std::string(to_string(metric)) + "=" + fmt(ks);
    all_ok = all_ok && ks < 0.08;
  }
  return {all_ok, "uniformity KS distances: " + detail};
}

struct Criterion {
  int number;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "oracle equivalence", criterion_oracle_equivalence},
    {2, "kolmogorov asymptotics", criterion_kolmogorov_asymptotics},
    {3, "unbiasedness", criterion_unbiasedness},
    {4, "deformation suite", criterion_deformations},
    {5, "paper-table spot reproduction", criterion_paper_spot},
    {6, "correlation blindness", criterion_blindness},
    {7, "likelihood-ratio dominance", criterion_llr_dominance},
    {8, "cli determinism across threads", criterion_cli_determinism},
    {9, "null calibration", criterion_null_calibration},
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& criterion : kCriteria) {
    if (selected != 0 && criterion.number != selected) continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << "criterion "
              << criterion.number << " (" << criterion.name << "): "
              << outcome.detail << " [" << fmt(elapsed_s(start)) << "s]"
              << std::endl;
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
