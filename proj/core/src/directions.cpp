#include "tsb/directions.hpp"

#include "tsb/errors.hpp"

namespace tsb {

Eigen::MatrixXd sample_unit_directions(Eigen::Index d, Eigen::Index k,
                                       RngStream& stream) {
  if (d < 1 || k < 1) {
    throw DomainError("sample_unit_directions: d >= 1 and k >= 1 required");
  }
  Eigen::MatrixXd dirs(k, d);
  for (Eigen::Index row = 0; row < k; ++row) {
    double norm2;
    do {
      norm2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double z = stream.normal();
        dirs(row, c) = z;
        norm2 += z * z;
      }
    } while (norm2 == 0.0);  // measure-zero draw, retried
    dirs.row(row) /= std::sqrt(norm2);
  }
  return dirs;
}

}  // namespace tsb
