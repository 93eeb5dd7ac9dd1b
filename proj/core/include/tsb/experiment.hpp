#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsb/dataio.hpp"
#include "tsb/deformations.hpp"
#include "tsb/models.hpp"
#include "tsb/statistics.hpp"

namespace tsb {

struct MetricSetting {
  MetricKind kind = MetricKind::SW;
  MetricConfig cfg;
};

struct SourceSetting {
  bool is_dataset = false;
  // generated model
  std::string family;  // "cg" or "mog"
  Eigen::Index d = 0;
  Eigen::Index q = 0;                // 0: derive from d
  std::optional<ModelSpec> inline_spec;
  // dataset
  std::string dataset_path;
  DataFormat dataset_format = DataFormat::Csv;
};

struct ExperimentConfig {
  int version = 1;
  std::uint64_t master_seed = 0;
  SourceSetting source;
  std::vector<MetricSetting> metrics;
  std::vector<DeformKind> deformations;
  std::vector<Eigen::Index> sample_sizes;
  std::vector<double> alphas{0.05, 0.01};
  std::size_t null_iterations = 0;  // 0: source-dependent default
  std::size_t reps = 100;
  double tolerance = 1e-2;
  double eps_max = 2.0;
  bool scale_features = false;
  bool bootstrap_with_replacement = true;
  std::string output_dir = "out";
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  unsigned threads = 0;                       // 0: hardware default
  std::string output_override;                // --output
  std::optional<std::uint64_t> seed_override; // --seed
  bool resume = false;                        // --resume
};

// Exit codes: 0 success, 1 configuration error, 2 partial failures.
int cmd_null(const std::filesystem::path& config_path, const RunOptions& options);
int cmd_scan(const std::filesystem::path& config_path, const RunOptions& options);
int cmd_report(const std::filesystem::path& results_dir, const RunOptions& options);

}  // namespace tsb
