#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsb/errors.hpp"
#include "tsb/experiment.hpp"
#include "tsb/kolmogorov.hpp"
#include "tsb/nulls.hpp"
#include "tsb/warnings.hpp"

using namespace tsb;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path path = dir / "config.json";
  std::ofstream os(path);
  os << body;
  return path;
}

std::string smoke_config(const fs::path& out_dir, const std::string& extra = "") {
  std::ostringstream os;
  os << R"({
  "version": 1,
  "master_seed": 90210,
  "source": {"type": "model", "family": "cg", "d": 2},
  "metrics": [{"kind": "sw", "slices": 8}, {"kind": "mean_ks"}],
  "deformations": ["mu"],
  "sample_sizes": [120],
  "alphas": [0.05, 0.01],
  "null_iterations": 150,
  "reps": 10,
  "tolerance": 0.01,
  "eps_max": 2.0,
  "output_dir": ")" << out_dir.generic_string() << "\"" << extra << "\n}\n";
  return os.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path);
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

}  // namespace

TEST_CASE("config errors carry json pointers") {
  TempDir tmp("tsb_cfg_tests");
  const auto bad_metric = write_config(tmp.path, R"({
    "version": 1,
    "master_seed": 1,
    "source": {"type": "model", "family": "cg", "d": 2},
    "metrics": [{"kind": "nope"}],
    "deformations": ["mu"],
    "sample_sizes": [50],
    "output_dir": "out"
  })");
  try {
    load_config(bad_metric);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.pointer == "/metrics/0/kind");
  }

  const auto bad_source = write_config(tmp.path, R"({
    "version": 1,
    "master_seed": 1,
    "source": {"type": "volcano"},
    "metrics": [{"kind": "sw"}],
    "deformations": ["mu"],
    "sample_sizes": [50],
    "output_dir": "out"
  })");
  try {
    load_config(bad_source);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.pointer == "/source/type");
  }
}

TEST_CASE("sample sizes below d+2 are rejected when the Gaussian distance runs") {
  TempDir tmp("tsb_cfg_fgd");
  const auto cfg = write_config(tmp.path, R"({
    "version": 1,
    "master_seed": 1,
    "source": {"type": "model", "family": "cg", "d": 10},
    "metrics": [{"kind": "fgd"}],
    "deformations": ["mu"],
    "sample_sizes": [8],
    "null_iterations": 10,
    "output_dir": ")" + (tmp.path / "out").generic_string() + R"("
  })");
  RunOptions options;
  CHECK(cmd_null(cfg, options) == 1);
}

TEST_CASE("null runs populate and then reuse the cache") {
  TempDir tmp("tsb_null_cache");
  const auto cfg = write_config(tmp.path, smoke_config(tmp.path / "out"));
  RunOptions options;
  CHECK(cmd_null(cfg, options) == 0);

  const fs::path cache = tmp.path / "out" / "cache";
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(cache)) entries.push_back(e.path());
  CHECK(entries.size() == 4);  // two metrics: csv + meta each

  // second run must hit the cache: contents unchanged byte for byte
  std::vector<std::string> before;
  for (const auto& p : entries) before.push_back(read_file(p));
  CHECK(cmd_null(cfg, options) == 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(read_file(entries[i]) == before[i]);
  }
}

TEST_CASE("corrupted cache entries are rebuilt with a warning") {
  TempDir tmp("tsb_null_corrupt");
  const auto cfg = write_config(tmp.path, smoke_config(tmp.path / "out"));
  RunOptions options;
  REQUIRE(cmd_null(cfg, options) == 0);

  const fs::path cache = tmp.path / "out" / "cache";
  fs::path victim;
  for (const auto& e : fs::directory_iterator(cache)) {
    if (e.path().extension() == ".csv") {
      victim = e.path();
      break;
    }
  }
  REQUIRE(!victim.empty());
  {
    std::ofstream os(victim);
    os << "iteration,value\nnot,numbers\n";
  }

  std::vector<std::string> captured;
  set_warning_handler([&](const std::string& msg) { captured.push_back(msg); });
  CHECK(cmd_null(cfg, options) == 0);
  set_warning_handler({});
  bool saw_rebuild = false;
  for (const auto& msg : captured) {
    if (msg.find("rebuild") != std::string::npos) saw_rebuild = true;
  }
  CHECK(saw_rebuild);
}

TEST_CASE("printed thresholds match direct computation on the cached null") {
  TempDir tmp("tsb_null_thresholds");
  const auto cfg = write_config(tmp.path, smoke_config(tmp.path / "out"));
  RunOptions options;
  REQUIRE(cmd_null(cfg, options) == 0);

  const fs::path cache = tmp.path / "out" / "cache";
  for (const auto& e : fs::directory_iterator(cache)) {
    if (e.path().extension() != ".csv") continue;
    const fs::path meta = e.path().parent_path() /
                          (e.path().stem().string() + ".meta.json");
    const NullDistribution null = load_null(e.path(), meta);
    CHECK(null.iterations == 150);
    CHECK(threshold(null, 0.05).t_alpha >= threshold(null, 0.32).t_alpha);
    CHECK(threshold(null, 0.01).t_alpha >= threshold(null, 0.05).t_alpha);
  }
}

TEST_CASE("scan emits results, markdown, timings and a manifest") {
  TempDir tmp("tsb_scan_smoke");
  const auto cfg = write_config(tmp.path, smoke_config(tmp.path / "out"));
  RunOptions options;
  CHECK(cmd_scan(cfg, options) == 0);

  const fs::path out = tmp.path / "out";
  CHECK(fs::exists(out / "results.csv"));
  CHECK(fs::exists(out / "results.md"));
  CHECK(fs::exists(out / "timings.csv"));
  CHECK(fs::exists(out / "run_manifest.json"));

  const std::string csv = read_file(out / "results.csv");
  CHECK(csv.find("model,deformation,metric,n,eps95,eps95_low,eps95_up,"
                 "eps99,eps99_low,eps99_up,converged") == 0);
  CHECK(csv.find("cg-d2,mu,sw,120,") != std::string::npos);
  CHECK(csv.find("cg-d2,mu,mean_ks,120,") != std::string::npos);
}

TEST_CASE("scan results are byte identical under reruns and resume") {
  TempDir tmp("tsb_scan_determinism");
  const auto out1 = tmp.path / "out1";
  const auto out2 = tmp.path / "out2";
  const auto cfg1 = write_config(tmp.path, smoke_config(out1));
  RunOptions options;
  REQUIRE(cmd_scan(cfg1, options) == 0);

  const auto cfg2 = write_config(tmp.path, smoke_config(out2));
  REQUIRE(cmd_scan(cfg2, options) == 0);
  CHECK(read_file(out1 / "results.csv") == read_file(out2 / "results.csv"));

  // resumed runs reuse completed rows and reproduce the same bytes
  RunOptions resume;
  resume.resume = true;
  REQUIRE(cmd_scan(cfg1, resume) == 0);
  CHECK(read_file(out1 / "results.csv") == read_file(out2 / "results.csv"));
}

TEST_CASE("likelihood-ratio rows are dashed for non-invertible deformations") {
  TempDir tmp("tsb_scan_llr_dash");
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, R"({
    "version": 1,
    "master_seed": 4242,
    "source": {"type": "model", "family": "cg", "d": 2},
    "metrics": [{"kind": "llr"}],
    "deformations": ["noise_normal", "mu"],
    "sample_sizes": [100],
    "alphas": [0.05, 0.01],
    "null_iterations": 120,
    "reps": 10,
    "output_dir": ")" + out.generic_string() + R"("
  })");
  RunOptions options;
  CHECK(cmd_scan(cfg, options) == 0);

  const std::string csv = read_file(out / "results.csv");
  CHECK(csv.find("noise_normal,llr") == std::string::npos);
  CHECK(csv.find("mu,llr") != std::string::npos);

  const std::string md = read_file(out / "results.md");
  const auto noise_pos = md.find("noise_normal-deformation");
  REQUIRE(noise_pos != std::string::npos);
  CHECK(md.find("| llr | - | - | - |", noise_pos) != std::string::npos);
}

TEST_CASE("report emits normalized histograms and monotone ecdf series") {
  TempDir tmp("tsb_report");
  const auto out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, smoke_config(out));
  RunOptions options;
  REQUIRE(cmd_null(cfg, options) == 0);
  CHECK(cmd_report(out, options) == 0);

  const fs::path report = out / "report";
  bool saw_pdf = false, saw_cdf = false;
  for (const auto& e : fs::directory_iterator(report)) {
    const std::string name = e.path().filename().string();
    std::ifstream is(e.path());
    std::string header;
    std::getline(is, header);
    if (name.rfind("pdf_", 0) == 0) {
      saw_pdf = true;
      double total_mass = 0.0;
      std::string line;
      const bool ks_family = name.find("mean_ks") != std::string::npos;
      if (ks_family) CHECK(header.find("kolmogorov_pdf") != std::string::npos);
      while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string field;
        std::vector<double> fields;
        while (std::getline(row, field, ',')) fields.push_back(std::stod(field));
        total_mass += fields[3];
        if (ks_family) {
          CHECK(fields.back() == doctest::Approx(kolmogorov_pdf(fields[2])));
        }
      }
      CHECK(total_mass == doctest::Approx(1.0).epsilon(1e-9));
    } else if (name.rfind("cdf_", 0) == 0) {
      saw_cdf = true;
      double prev = 0.0;
      std::string line;
      double last = 0.0;
      while (std::getline(is, line)) {
        const auto comma = line.find(',');
        const double ecdf = std::stod(line.substr(comma + 1));
        CHECK(ecdf >= prev);
        prev = ecdf;
        last = ecdf;
      }
      CHECK(last == doctest::Approx(1.0));
    }
  }
  CHECK(saw_pdf);
  CHECK(saw_cdf);

  TempDir empty("tsb_report_empty");
  CHECK(cmd_report(empty.path, options) == 1);
}
