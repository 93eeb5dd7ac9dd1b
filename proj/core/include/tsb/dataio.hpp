#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tsb/data_matrix.hpp"
#include "tsb/hashing.hpp"
#include "tsb/rng.hpp"

namespace tsb {

struct ScaleInfo {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
};

struct Dataset {
  DataMatrix matrix;
  std::vector<std::string> feature_names;
  std::string source_path;
  Digest128 content_hash;
};

enum class DataFormat { Csv, Raw };

/// csv: header row of names, '.' decimal values, one point per row.
/// raw: 16-byte header (magic "TSB1", row and feature counts as
/// little-endian u32, four reserved zero bytes) followed by the values
/// as little-endian IEEE doubles, row-major.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);

void save_dataset_csv(const DataMatrix& m,
                      const std::vector<std::string>& feature_names,
                      const std::filesystem::path& path);
void save_dataset_raw(const DataMatrix& m, const std::filesystem::path& path);

/// Hash of shape and value bit patterns; identical for csv and raw
/// encodings of the same matrix.
Digest128 hash_values(const DataMatrix& m);

ScaleInfo compute_scale(const DataMatrix& m);  // throws ConstantFeature
DataMatrix standardize(const DataMatrix& m, const ScaleInfo& scale);
DataMatrix destandardize(const DataMatrix& m, const ScaleInfo& scale);
std::pair<Dataset, ScaleInfo> standardize(const Dataset& ds);

/// Uniform shuffle, then first floor(n/2) rows versus the rest.
std::pair<DataMatrix, DataMatrix> split_half(const DataMatrix& m,
                                             RngStream& stream);

DataMatrix bootstrap_draw(const DataMatrix& half, Eigen::Index n,
                          RngStream& stream, bool with_replacement = true);

}  // namespace tsb
