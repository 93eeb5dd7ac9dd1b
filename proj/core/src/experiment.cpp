#include "tsb/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tsb/errors.hpp"
#include "tsb/kolmogorov.hpp"
#include "tsb/nulls.hpp"
#include "tsb/parallel.hpp"
#include "tsb/scan.hpp"
#include "tsb/warnings.hpp"

namespace tsb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int cl_label(double alpha) {
  return static_cast<int>(std::lround((1.0 - alpha) * 100.0));
}

// ---- configuration -------------------------------------------------------

template <typename T>
T require_field(const json& j, const std::string& pointer, const char* key) {
  if (!j.contains(key)) throw ConfigError(pointer + "/" + key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(pointer + "/" + key, "wrong type");
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.version = require_field<int>(j, "", "version");
  if (cfg.version != 1) throw ConfigError("/version", "unsupported schema version");
  cfg.master_seed = require_field<std::uint64_t>(j, "", "master_seed");

  const json& src = j.contains("source") ? j.at("source") : json{};
  if (!src.is_object()) throw ConfigError("/source", "missing or not an object");
  const auto type = require_field<std::string>(src, "/source", "type");
  if (type == "model") {
    cfg.source.is_dataset = false;
    if (src.contains("spec")) {
      try {
        cfg.source.inline_spec = model_from_json(src.at("spec").dump());
      } catch (const std::exception& e) {
        throw ConfigError("/source/spec", e.what());
      }
      cfg.source.d = dimension(*cfg.source.inline_spec);
    } else {
      cfg.source.family = require_field<std::string>(src, "/source", "family");
      if (cfg.source.family != "cg" && cfg.source.family != "mog") {
        throw ConfigError("/source/family", "expected 'cg' or 'mog'");
      }
      cfg.source.d = require_field<Eigen::Index>(src, "/source", "d");
      if (cfg.source.d < 1) throw ConfigError("/source/d", "must be >= 1");
      if (src.contains("q")) {
        cfg.source.q = require_field<Eigen::Index>(src, "/source", "q");
        if (cfg.source.q < 1) throw ConfigError("/source/q", "must be >= 1");
      }
    }
  } else if (type == "dataset") {
    cfg.source.is_dataset = true;
    cfg.source.dataset_path = require_field<std::string>(src, "/source", "path");
    const auto format = require_field<std::string>(src, "/source", "format");
    if (format == "csv") {
      cfg.source.dataset_format = DataFormat::Csv;
    } else if (format == "raw") {
      cfg.source.dataset_format = DataFormat::Raw;
    } else {
      throw ConfigError("/source/format", "expected 'csv' or 'raw'");
    }
  } else {
    throw ConfigError("/source/type", "expected 'model' or 'dataset'");
  }

  if (!j.contains("metrics") || !j.at("metrics").is_array() || j.at("metrics").empty()) {
    throw ConfigError("/metrics", "nonempty array required");
  }
  for (std::size_t i = 0; i < j.at("metrics").size(); ++i) {
    const json& mj = j.at("metrics").at(i);
    const std::string pointer = "/metrics/" + std::to_string(i);
    MetricSetting m;
    const auto kind_name = require_field<std::string>(mj, pointer, "kind");
    const auto kind = metric_kind_from_string(kind_name);
    if (!kind) throw ConfigError(pointer + "/kind", "unknown metric '" + kind_name + "'");
    m.kind = *kind;
    if (mj.contains("slices")) {
      m.cfg.slices = require_field<Eigen::Index>(mj, pointer, "slices");
      if (m.cfg.slices < 1) throw ConfigError(pointer + "/slices", "must be >= 1");
    }
    if (mj.contains("fgd_fit_fractions")) {
      m.cfg.fgd_fit_fractions =
          require_field<std::vector<double>>(mj, pointer, "fgd_fit_fractions");
      if (m.cfg.fgd_fit_fractions.empty() ||
          std::none_of(m.cfg.fgd_fit_fractions.begin(), m.cfg.fgd_fit_fractions.end(),
                       [](double f) { return f == 1.0; })) {
        throw ConfigError(pointer + "/fgd_fit_fractions", "must be nonempty and include 1.0");
      }
      for (double f : m.cfg.fgd_fit_fractions) {
        if (f < 1.0) throw ConfigError(pointer + "/fgd_fit_fractions", "fractions must be >= 1");
      }
    }
    if (mj.contains("fgd_draws_per_size")) {
      m.cfg.fgd_draws_per_size = require_field<Eigen::Index>(mj, pointer, "fgd_draws_per_size");
      if (m.cfg.fgd_draws_per_size < 1) {
        throw ConfigError(pointer + "/fgd_draws_per_size", "must be >= 1");
      }
    }
    cfg.metrics.push_back(std::move(m));
  }

  if (!j.contains("deformations") || !j.at("deformations").is_array() ||
      j.at("deformations").empty()) {
    throw ConfigError("/deformations", "nonempty array required");
  }
  for (std::size_t i = 0; i < j.at("deformations").size(); ++i) {
    std::string name;
    try {
      name = j.at("deformations").at(i).get<std::string>();
    } catch (const json::exception&) {
      throw ConfigError("/deformations/" + std::to_string(i), "expected a string");
    }
    const auto kind = deform_kind_from_string(name);
    if (!kind) {
      throw ConfigError("/deformations/" + std::to_string(i),
                        "unknown deformation '" + name + "'");
    }
    cfg.deformations.push_back(*kind);
  }

  cfg.sample_sizes = require_field<std::vector<Eigen::Index>>(j, "", "sample_sizes");
  if (cfg.sample_sizes.empty()) throw ConfigError("/sample_sizes", "nonempty list required");
  for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
    if (cfg.sample_sizes[i] < 2) {
      throw ConfigError("/sample_sizes/" + std::to_string(i), "must be >= 2");
    }
  }

  if (j.contains("alphas")) {
    cfg.alphas = require_field<std::vector<double>>(j, "", "alphas");
    if (cfg.alphas.empty()) throw ConfigError("/alphas", "nonempty list required");
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
      if (!(cfg.alphas[i] > 0.0 && cfg.alphas[i] < 1.0)) {
        throw ConfigError("/alphas/" + std::to_string(i), "must be in (0, 1)");
      }
    }
  }
  if (j.contains("null_iterations")) {
    cfg.null_iterations = require_field<std::size_t>(j, "", "null_iterations");
    if (cfg.null_iterations < 1) throw ConfigError("/null_iterations", "must be >= 1");
  }
  if (j.contains("reps")) {
    cfg.reps = require_field<std::size_t>(j, "", "reps");
    if (cfg.reps < 2) throw ConfigError("/reps", "must be >= 2");
  }
  if (j.contains("tolerance")) {
    cfg.tolerance = require_field<double>(j, "", "tolerance");
    if (!(cfg.tolerance > 0.0)) throw ConfigError("/tolerance", "must be > 0");
  }
  if (j.contains("eps_max")) {
    cfg.eps_max = require_field<double>(j, "", "eps_max");
    if (!(cfg.eps_max > 0.0)) throw ConfigError("/eps_max", "must be > 0");
  }
  if (j.contains("scale_features")) {
    cfg.scale_features = require_field<bool>(j, "", "scale_features");
  }
  if (j.contains("bootstrap_with_replacement")) {
    cfg.bootstrap_with_replacement =
        require_field<bool>(j, "", "bootstrap_with_replacement");
  }
  cfg.output_dir = require_field<std::string>(j, "", "output_dir");
  return cfg;
}

// ---- resolved run state --------------------------------------------------

struct ResolvedSource {
  std::optional<ModelSpec> model;
  std::optional<Dataset> dataset;
  std::optional<ScaleInfo> scale;
  std::string id;  // short, stable identifier for file names and CSV rows

  Eigen::Index dimension_of() const {
    return model ? tsb::dimension(*model) : dataset->matrix.cols();
  }
};

struct RunState {
  ExperimentConfig cfg;
  RngStream root;
  ResolvedSource source;
  fs::path output_dir;
  fs::path cache_dir;
};

ResolvedSource resolve_source(const ExperimentConfig& cfg, const RngStream& root) {
  ResolvedSource out;
  if (cfg.source.is_dataset) {
    out.dataset = load_dataset(cfg.source.dataset_path, cfg.source.dataset_format);
    out.scale = compute_scale(out.dataset->matrix);
    out.id = fs::path(cfg.source.dataset_path).stem().string() + "-" +
             out.dataset->content_hash.hex().substr(0, 8);
    return out;
  }
  if (cfg.source.inline_spec) {
    out.model = *cfg.source.inline_spec;
    out.id = (std::holds_alternative<CGSpec>(*out.model) ? "cg-d" : "mog-d") +
             std::to_string(dimension(*out.model));
    return out;
  }
  RngStream model_stream = root.substream("model", 0);
  if (cfg.source.family == "cg") {
    out.model = cfg.source.q > 0 ? build_cg(cfg.source.d, cfg.source.q, model_stream)
                                 : build_cg(cfg.source.d, model_stream);
    out.id = "cg-d" + std::to_string(cfg.source.d);
  } else {
    const Eigen::Index q = cfg.source.q > 0
                               ? cfg.source.q
                               : static_cast<Eigen::Index>(std::ceil(
                                     std::sqrt(static_cast<double>(cfg.source.d))));
    out.model = build_mog(cfg.source.d, q, model_stream);
    out.id = "mog-d" + std::to_string(cfg.source.d) + "-q" + std::to_string(q);
  }
  return out;
}

std::size_t default_null_iterations(const ExperimentConfig& cfg) {
  if (cfg.null_iterations > 0) return cfg.null_iterations;
  return cfg.source.is_dataset ? 1000 : 10000;
}

RunState make_run_state(const fs::path& config_path, const RunOptions& options) {
  std::ifstream is(config_path);
  if (!is) throw ConfigError("", "cannot open config " + config_path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }

  RunState state;
  state.cfg = parse_config(j);
  if (options.seed_override) state.cfg.master_seed = *options.seed_override;
  if (!options.output_override.empty()) state.cfg.output_dir = options.output_override;
  if (options.threads > 0) set_max_threads(options.threads);

  state.root = RngStream(state.cfg.master_seed, "tstbench", 0);
  state.source = resolve_source(state.cfg, state.root);

  // the extrapolated Gaussian distance needs subsamples of at least d + 2
  const bool has_fgd = std::any_of(state.cfg.metrics.begin(), state.cfg.metrics.end(),
                                   [](const MetricSetting& m) {
                                     return m.kind == MetricKind::FGD;
                                   });
  if (has_fgd) {
    const Eigen::Index d = state.source.dimension_of();
    for (std::size_t i = 0; i < state.cfg.sample_sizes.size(); ++i) {
      if (state.cfg.sample_sizes[i] < d + 2) {
        throw ConfigError("/sample_sizes/" + std::to_string(i),
                          "below d + 2, too small for the extrapolated Gaussian distance");
      }
    }
  }

  state.output_dir = state.cfg.output_dir;
  fs::create_directories(state.output_dir);
  if (const char* env = std::getenv("TSTBENCH_CACHE"); env && *env) {
    state.cache_dir = env;
  } else {
    state.cache_dir = state.output_dir / "cache";
  }
  fs::create_directories(state.cache_dir);
  return state;
}

// ---- null cache ----------------------------------------------------------

std::string null_cache_key(const RunState& state, const MetricSetting& metric,
                           Eigen::Index n, std::size_t iters) {
  Hasher h;
  if (state.source.model) {
    h.text("model");
    h.text(model_to_json(*state.source.model));
  } else {
    h.text("dataset");
    h.text(state.source.dataset->content_hash.hex());
    h.u64(state.cfg.scale_features ? 1 : 0);
    h.u64(state.cfg.bootstrap_with_replacement ? 1 : 0);
  }
  h.text(to_string(metric.kind));
  h.u64(static_cast<std::uint64_t>(metric.cfg.slices));
  for (double f : metric.cfg.fgd_fit_fractions) h.f64(f);
  h.u64(static_cast<std::uint64_t>(metric.cfg.fgd_draws_per_size));
  h.u64(static_cast<std::uint64_t>(n));
  h.u64(iters);
  h.u64(state.cfg.master_seed);
  return h.digest().hex().substr(0, 16);
}

NullDistribution build_null(const RunState& state, const MetricSetting& metric,
                            Eigen::Index n, std::size_t iters) {
  const RngStream stream =
      state.root.substream(std::string("null:") + to_string(metric.kind),
                           static_cast<std::uint64_t>(n));
  if (state.source.model) {
    return estimate_null_generator(*state.source.model, metric.kind, metric.cfg, n,
                                   iters, stream);
  }
  const DataMatrix& data = state.source.dataset->matrix;
  if (state.cfg.scale_features) {
    const DataMatrix scaled = standardize(data, *state.source.scale);
    return estimate_null_bootstrap(scaled, metric.kind, metric.cfg, n, iters, stream,
                                   state.cfg.bootstrap_with_replacement);
  }
  return estimate_null_bootstrap(data, metric.kind, metric.cfg, n, iters, stream,
                                 state.cfg.bootstrap_with_replacement);
}

struct CachedNull {
  NullDistribution null;
  bool cache_hit = false;
};

CachedNull null_for(const RunState& state, const MetricSetting& metric,
                    Eigen::Index n, std::size_t iters) {
  const std::string key = null_cache_key(state, metric, n, iters);
  const fs::path csv = state.cache_dir / ("null_" + key + ".csv");
  const fs::path meta = state.cache_dir / ("null_" + key + ".meta.json");
  if (fs::exists(csv) && fs::exists(meta)) {
    try {
      NullDistribution null = load_null(csv, meta);
      if (null.metric == metric.kind && null.n == n && null.iterations == iters) {
        return {std::move(null), true};
      }
      warn("cache entry " + csv.string() + " does not match its key; rebuilding");
    } catch (const std::exception& e) {
      warn("cache entry " + csv.string() + " is corrupted (" + e.what() +
           "); rebuilding");
    }
  }
  CachedNull out{build_null(state, metric, n, iters), false};
  save_null(out.null, csv, meta);
  return out;
}

// ---- scan outputs --------------------------------------------------------

struct BoundRecord {
  double alpha = 0.0;
  double eps = 0.0;
  double eps_low = 0.0;
  double eps_up = 0.0;
  bool converged = false;
};

struct RowRecord {
  std::string key;
  std::string status;  // done | failed | skipped
  DeformKind deformation = DeformKind::Mu;
  MetricKind metric = MetricKind::SW;
  Eigen::Index n = 0;
  std::vector<BoundRecord> bounds;
  double scan_seconds = 0.0;
  double null_seconds = 0.0;
  std::string error;
  std::string deformation_json;  // frozen descriptor at the located bound
};

std::string row_key(DeformKind deform, MetricKind metric, Eigen::Index n) {
  return std::string(to_string(deform)) + "|" + to_string(metric) + "|" +
         std::to_string(n);
}

json config_echo(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["master_seed"] = cfg.master_seed;
  if (cfg.source.is_dataset) {
    j["source"] = {{"type", "dataset"},
                   {"path", cfg.source.dataset_path},
                   {"format", cfg.source.dataset_format == DataFormat::Csv ? "csv" : "raw"}};
  } else if (cfg.source.inline_spec) {
    j["source"] = {{"type", "model"}, {"spec", json::parse(model_to_json(*cfg.source.inline_spec))}};
  } else {
    j["source"] = {{"type", "model"}, {"family", cfg.source.family}, {"d", cfg.source.d}};
    if (cfg.source.q > 0) j["source"]["q"] = cfg.source.q;
  }
  json metrics = json::array();
  for (const auto& m : cfg.metrics) {
    json mj;
    mj["kind"] = to_string(m.kind);
    mj["slices"] = m.cfg.slices;
    mj["fgd_fit_fractions"] = m.cfg.fgd_fit_fractions;
    mj["fgd_draws_per_size"] = m.cfg.fgd_draws_per_size;
    metrics.push_back(std::move(mj));
  }
  j["metrics"] = std::move(metrics);
  json deforms = json::array();
  for (auto dk : cfg.deformations) deforms.push_back(to_string(dk));
  j["deformations"] = std::move(deforms);
  j["sample_sizes"] = cfg.sample_sizes;
  j["alphas"] = cfg.alphas;
  j["null_iterations"] = default_null_iterations(cfg);
  j["reps"] = cfg.reps;
  j["tolerance"] = cfg.tolerance;
  j["eps_max"] = cfg.eps_max;
  j["scale_features"] = cfg.scale_features;
  j["bootstrap_with_replacement"] = cfg.bootstrap_with_replacement;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string config_digest(const ExperimentConfig& cfg) {
  Hasher h;
  h.text(config_echo(cfg).dump());
  return h.digest().hex();
}

json manifest_json(const RunState& state, const std::vector<RowRecord>& rows) {
  json j;
  j["schema"] = 1;
  j["config"] = config_echo(state.cfg);
  j["config_digest"] = config_digest(state.cfg);
  if (state.source.model) {
    j["resolved_model"] = json::parse(model_to_json(*state.source.model));
  } else {
    j["dataset"] = {{"path", state.source.dataset->source_path},
                    {"content_hash", state.source.dataset->content_hash.hex()},
                    {"rows", state.source.dataset->matrix.rows()},
                    {"cols", state.source.dataset->matrix.cols()}};
  }
  j["decisions"] = {{"tolerance_mode", "relative"},
                    {"frozen_deformation_directions", "per-scan"},
                    {"split_shuffle", "per-iteration"},
                    {"bootstrap_with_replacement", state.cfg.bootstrap_with_replacement}};
  json rows_json = json::array();
  for (const auto& row : rows) {
    json rj;
    rj["key"] = row.key;
    rj["status"] = row.status;
    rj["deformation"] = to_string(row.deformation);
    rj["metric"] = to_string(row.metric);
    rj["n"] = row.n;
    json bounds = json::array();
    for (const auto& b : row.bounds) {
      bounds.push_back({{"alpha", b.alpha},
                        {"eps", b.eps},
                        {"eps_low", b.eps_low},
                        {"eps_up", b.eps_up},
                        {"converged", b.converged}});
    }
    rj["bounds"] = std::move(bounds);
    rj["scan_seconds"] = row.scan_seconds;
    rj["null_seconds"] = row.null_seconds;
    if (!row.error.empty()) rj["error"] = row.error;
    if (!row.deformation_json.empty()) {
      rj["deformation_descriptor"] = json::parse(row.deformation_json);
    }
    rows_json.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_json);
  return j;
}

std::vector<RowRecord> load_manifest_rows(const fs::path& manifest_path,
                                          const std::string& digest) {
  std::vector<RowRecord> rows;
  std::ifstream is(manifest_path);
  if (!is) return rows;
  try {
    json j;
    is >> j;
    if (j.value("config_digest", "") != digest) {
      warn("existing manifest was produced by a different configuration; ignoring it");
      return rows;
    }
    for (const auto& rj : j.at("rows")) {
      RowRecord row;
      row.key = rj.at("key").get<std::string>();
      row.status = rj.at("status").get<std::string>();
      row.deformation = *deform_kind_from_string(rj.at("deformation").get<std::string>());
      row.metric = *metric_kind_from_string(rj.at("metric").get<std::string>());
      row.n = rj.at("n").get<Eigen::Index>();
      for (const auto& bj : rj.at("bounds")) {
        BoundRecord b;
        b.alpha = bj.at("alpha").get<double>();
        b.eps = bj.at("eps").get<double>();
        b.eps_low = bj.at("eps_low").get<double>();
        b.eps_up = bj.at("eps_up").get<double>();
        b.converged = bj.at("converged").get<bool>();
        row.bounds.push_back(b);
      }
      row.scan_seconds = rj.value("scan_seconds", 0.0);
      row.null_seconds = rj.value("null_seconds", 0.0);
      row.error = rj.value("error", "");
      if (rj.contains("deformation_descriptor")) {
        row.deformation_json = rj.at("deformation_descriptor").dump();
      }
      rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    warn(std::string("could not reuse manifest: ") + e.what());
    rows.clear();
  }
  return rows;
}

void write_results_csv(const RunState& state, const std::vector<RowRecord>& rows,
                       const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path.string());
  os << "model,deformation,metric,n";
  for (double alpha : state.cfg.alphas) {
    const int label = cl_label(alpha);
    os << ",eps" << label << ",eps" << label << "_low,eps" << label << "_up";
  }
  os << ",converged\n";
  for (const auto& row : rows) {
    if (row.status == "skipped") continue;
    os << state.source.id << ',' << to_string(row.deformation) << ','
       << to_string(row.metric) << ',' << row.n;
    bool all_converged = row.status == "done";
    if (row.status == "done") {
      for (const auto& b : row.bounds) {
        os << ',' << format_double(b.eps) << ',' << format_double(b.eps_low) << ','
           << format_double(b.eps_up);
        all_converged = all_converged && b.converged;
      }
    } else {
      for (std::size_t i = 0; i < state.cfg.alphas.size(); ++i) os << ",,,";
      all_converged = false;
    }
    os << ',' << (all_converged ? "true" : "false") << '\n';
  }
}

void write_timings_csv(const RunState& state, const std::vector<RowRecord>& rows,
                       const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path.string());
  os << "model,deformation,metric,n,scan_seconds,null_seconds\n";
  for (const auto& row : rows) {
    if (row.status == "skipped") continue;
    os << state.source.id << ',' << to_string(row.deformation) << ','
       << to_string(row.metric) << ',' << row.n << ','
       << format_double(row.scan_seconds) << ',' << format_double(row.null_seconds)
       << '\n';
  }
}

std::string bound_cell(const BoundRecord& b) {
  std::string cell = format_double(b.eps);
  cell += " (-" + format_double(b.eps - b.eps_low);
  cell += " +" + format_double(b.eps_up - b.eps) + ")";
  if (!b.converged) cell += " !";
  return cell;
}

void write_markdown(const RunState& state, const std::vector<RowRecord>& rows,
                    const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path.string());
  os << "# Deformation bounds for " << state.source.id << "\n";
  for (Eigen::Index n : state.cfg.sample_sizes) {
    os << "\n## n = m = " << n << "\n";
    for (DeformKind deform : state.cfg.deformations) {
      os << "\n### " << to_string(deform) << "-deformation\n\n";
      os << "| Statistic |";
      for (double alpha : state.cfg.alphas) os << " eps_" << cl_label(alpha) << " |";
      os << " t (s) |\n|---|";
      for (std::size_t i = 0; i < state.cfg.alphas.size(); ++i) os << "---|";
      os << "---|\n";
      for (const auto& metric : state.cfg.metrics) {
        const std::string key = row_key(deform, metric.kind, n);
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const RowRecord& r) { return r.key == key; });
        os << "| " << to_string(metric.kind) << " |";
        if (it == rows.end() || it->status != "done") {
          for (std::size_t i = 0; i < state.cfg.alphas.size(); ++i) os << " - |";
          os << " - |\n";
          continue;
        }
        for (const auto& b : it->bounds) os << ' ' << bound_cell(b) << " |";
        os << ' ' << format_double(it->scan_seconds) << " |\n";
      }
    }
  }
}

// ---- subcommands ---------------------------------------------------------

int run_null(const fs::path& config_path, const RunOptions& options) {
  RunState state = make_run_state(config_path, options);
  const std::size_t iters = default_null_iterations(state.cfg);
  const double levels[] = {0.32, 0.05, 0.01};

  for (Eigen::Index n : state.cfg.sample_sizes) {
    for (const auto& metric : state.cfg.metrics) {
      if (metric.kind == MetricKind::LLR) continue;  // strength-dependent null
      const auto cached = null_for(state, metric, n, iters);
      std::cout << state.source.id << " metric=" << to_string(metric.kind)
                << " n=" << n << " iterations=" << cached.null.iterations
                << (cached.cache_hit ? " [cache]" : " [built]") << "\n";
      for (double alpha : levels) {
        const auto thr = threshold(cached.null, alpha);
        std::cout << "  t[" << cl_label(alpha) << "%] = " << format_double(thr.t_alpha)
                  << "\n";
      }
    }
  }
  return 0;
}

int run_scan(const fs::path& config_path, const RunOptions& options) {
  RunState state = make_run_state(config_path, options);
  const std::size_t null_iters = default_null_iterations(state.cfg);
  const fs::path manifest_path = state.output_dir / "run_manifest.json";
  const std::string digest = config_digest(state.cfg);

  std::vector<RowRecord> previous;
  if (options.resume) previous = load_manifest_rows(manifest_path, digest);
  auto find_previous = [&](const std::string& key) -> const RowRecord* {
    const auto it = std::find_if(previous.begin(), previous.end(),
                                 [&](const RowRecord& r) { return r.key == key; });
    return it == previous.end() ? nullptr : &*it;
  };

  std::vector<RowRecord> rows;
  bool any_failed = false;

  for (Eigen::Index n : state.cfg.sample_sizes) {
    for (DeformKind deform : state.cfg.deformations) {
      for (const auto& metric : state.cfg.metrics) {
        RowRecord row;
        row.key = row_key(deform, metric.kind, n);
        row.deformation = deform;
        row.metric = metric.kind;
        row.n = n;

        if (metric.kind == MetricKind::LLR &&
            (!is_bijective(deform) || state.source.dataset)) {
          row.status = "skipped";
          rows.push_back(std::move(row));
          continue;
        }
        if (const RowRecord* done = find_previous(row.key);
            done && done->status == "done") {
          rows.push_back(*done);
          continue;
        }

        ScanProblem problem;
        if (state.source.model) {
          problem.source = GeneratorProblem{*state.source.model};
        } else {
          problem.source = DatasetProblem{state.source.dataset->matrix,
                                          *state.source.scale,
                                          state.cfg.scale_features,
                                          state.cfg.bootstrap_with_replacement};
        }
        problem.deform = deform;
        problem.metric = metric.kind;
        problem.cfg = metric.cfg;
        problem.n = n;
        problem.reps = state.cfg.reps;
        problem.eps_max = state.cfg.eps_max;
        problem.tolerance = state.cfg.tolerance;

        const RngStream scan_stream = state.root.substream(
            std::string("scan:") + to_string(deform) + ":" + to_string(metric.kind),
            static_cast<std::uint64_t>(n));

        try {
          const auto start = Clock::now();
          AltCache cache;
          if (metric.kind == MetricKind::LLR) {
            LlrNullCache llr_nulls;
            for (double alpha : state.cfg.alphas) {
              const EpsilonBound bound = bisect_epsilon_llr(
                  problem, null_iters, alpha, scan_stream, &cache, &llr_nulls);
              row.bounds.push_back({alpha, bound.eps, bound.eps_low, bound.eps_up,
                                    bound.converged});
            }
            row.null_seconds = 0.0;  // folded into the scan for this statistic
          } else {
            const auto cached = null_for(state, metric, n, null_iters);
            row.null_seconds = cached.null.elapsed_seconds;
            for (double alpha : state.cfg.alphas) {
              const EpsilonBound bound =
                  bisect_epsilon(problem, cached.null, alpha, scan_stream, &cache);
              row.bounds.push_back({alpha, bound.eps, bound.eps_low, bound.eps_up,
                                    bound.converged});
            }
          }
          row.scan_seconds =
              std::chrono::duration<double>(Clock::now() - start).count();
          row.status = "done";

          const ModelInfo info =
              state.source.model
                  ? model_info_of(*state.source.model)
                  : standardized_model_info(state.source.dataset->matrix.cols());
          const Deformation located =
              make_deformation(deform, row.bounds.front().eps, info,
                               scan_stream.substream("deform", 0));
          row.deformation_json = deformation_to_json(located);
        } catch (const std::exception& e) {
          row.status = "failed";
          row.error = e.what();
          any_failed = true;
          warn("scan row " + row.key + " failed: " + e.what());
        }
        rows.push_back(std::move(row));

        // manifest updated per row so an interrupted run can resume
        std::ofstream os(manifest_path);
        os << manifest_json(state, rows).dump(2) << '\n';
      }
    }
  }

  write_results_csv(state, rows, state.output_dir / "results.csv");
  write_timings_csv(state, rows, state.output_dir / "timings.csv");
  write_markdown(state, rows, state.output_dir / "results.md");
  {
    std::ofstream os(manifest_path);
    os << manifest_json(state, rows).dump(2) << '\n';
  }
  return any_failed ? 2 : 0;
}

void write_report_for(const NullDistribution& null, const fs::path& out_dir,
                      const std::string& tag) {
  const bool ks_family =
      null.metric == MetricKind::MeanKS || null.metric == MetricKind::SlicedKS;
  const auto& v = null.values;
  const double lo = v.front();
  const double hi = v.back();
  const int bins = 50;
  const double width = hi > lo ? (hi - lo) / bins : 1.0;

  std::vector<std::size_t> counts(bins, 0);
  for (double value : v) {
    auto b = hi > lo ? static_cast<int>((value - lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }

  {
    std::ofstream os(out_dir / ("pdf_" + tag + ".csv"));
    os << "bin_left,bin_right,bin_center,mass,density";
    if (ks_family) os << ",kolmogorov_pdf";
    os << '\n';
    for (int b = 0; b < bins; ++b) {
      const double left = lo + b * width;
      const double center = left + 0.5 * width;
      const double mass =
          static_cast<double>(counts[static_cast<std::size_t>(b)]) /
          static_cast<double>(null.iterations);
      os << format_double(left) << ',' << format_double(left + width) << ','
         << format_double(center) << ',' << format_double(mass) << ','
         << format_double(mass / width);
      if (ks_family) os << ',' << format_double(kolmogorov_pdf(center));
      os << '\n';
    }
  }
  {
    std::ofstream os(out_dir / ("cdf_" + tag + ".csv"));
    os << "value,ecdf";
    if (ks_family) os << ",kolmogorov_cdf";
    os << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
      os << format_double(v[i]) << ','
         << format_double(static_cast<double>(i + 1) /
                          static_cast<double>(v.size()));
      if (ks_family) os << ',' << format_double(kolmogorov_cdf(v[i]));
      os << '\n';
    }
  }
}

int run_report(const fs::path& results_dir, const RunOptions& options) {
  (void)options;
  fs::path cache_dir;
  if (const char* env = std::getenv("TSTBENCH_CACHE"); env && *env) {
    cache_dir = env;
  } else {
    cache_dir = results_dir / "cache";
  }
  if (!fs::exists(cache_dir)) {
    throw MissingCache("no null cache at " + cache_dir.string());
  }

  const fs::path report_dir = results_dir / "report";
  fs::create_directories(report_dir);
  std::size_t emitted = 0;
  for (const auto& entry : fs::directory_iterator(cache_dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("null_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const fs::path meta =
        entry.path().parent_path() / (entry.path().stem().string() + ".meta.json");
    if (!fs::exists(meta)) continue;
    NullDistribution null;
    try {
      null = load_null(entry.path(), meta);
    } catch (const std::exception& e) {
      warn("skipping unreadable cache entry " + name + ": " + e.what());
      continue;
    }
    std::string tag = std::string(to_string(null.metric)) + "_n" +
                      std::to_string(null.n);
    if (null.epsilon) tag += "_eps" + format_double(*null.epsilon);
    write_report_for(null, report_dir, tag);
    std::cout << "report: " << tag << " (" << null.iterations << " values)\n";
    ++emitted;
  }
  if (emitted == 0) {
    throw MissingCache("no usable null cache entries in " + cache_dir.string());
  }
  return 0;
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open config " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

int cmd_null(const fs::path& config_path, const RunOptions& options) {
  try {
    return run_null(config_path, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_scan(const fs::path& config_path, const RunOptions& options) {
  try {
    return run_scan(config_path, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_report(const fs::path& results_dir, const RunOptions& options) {
  try {
    return run_report(results_dir, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tsb
