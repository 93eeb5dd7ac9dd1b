#pragma once

#include <Eigen/Dense>

#include "tsb/rng.hpp"

namespace tsb {

/// K uniformly random unit vectors on the (d-1)-sphere, one per row,
/// obtained by normalizing independent standard normal draws.
Eigen::MatrixXd sample_unit_directions(Eigen::Index d, Eigen::Index k,
                                       RngStream& stream);

}  // namespace tsb
