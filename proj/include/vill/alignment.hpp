#pragma once

#include <string>

#include "vill/matrix.hpp"

namespace vill {

enum class AlignmentKind { none, moment };

std::string to_string(AlignmentKind kind);
AlignmentKind alignment_from_string(const std::string& name);

struct AlignmentLoss {
  double value = 0.0;
  Matrix source_grad;  // d value / d source_features
  Matrix target_grad;  // d value / d target_features
};

// kind none: zero loss and zero gradients.
// kind moment: ||mean_s - mean_t||^2 + ||cov_s - cov_t||_F^2, covariances with
// 1/(B-1) normalisation. The covariance term is dropped when either batch has
// a single row.
AlignmentLoss alignment_loss(AlignmentKind kind, const Matrix& source_features,
                             const Matrix& target_features);

// Unbiased batch covariance (d x d); requires at least two rows.
Matrix covariance(const Matrix& x);

}  // namespace vill
