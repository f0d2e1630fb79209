#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vill/matrix.hpp"

namespace vill {

// Floor applied to probabilities inside logarithms.
inline constexpr double kLogClamp = 1e-12;
inline constexpr double kSimplexTolerance = 1e-9;

// A length-C probability vector (C >= 2): virtual label distribution v,
// category weights omega, batch-mean prediction.
class CategoryDistribution {
 public:
  // Validates entries >= 0 and sum == 1 within kSimplexTolerance.
  explicit CategoryDistribution(std::vector<double> values);
  static CategoryDistribution uniform(std::size_t num_classes);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const CategoryDistribution&, const CategoryDistribution&) = default;

 private:
  std::vector<double> values_;
};

// E_i = C * v_i: class frequency relative to the balanced mean; mean(E) == 1.
class ScaledDistribution {
 public:
  // Accepts any finite nonnegative vector of length >= 2.
  explicit ScaledDistribution(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

struct LossValue {
  double value = 0.0;
  Matrix logit_grad;  // d value / d logits, same shape as the batch logits
};

ScaledDistribution scale_distribution(const CategoryDistribution& v);

// omega_i = (1 + alpha e^{-E_i}) / sum_k (1 + alpha e^{-E_k}).
// Strictly positive and strictly decreasing in E_i.
CategoryDistribution weight_vector(const ScaledDistribution& scaled, double alpha);

// Per-sample cross-entropy -log softmax(q_i)[y_i], computed stably.
std::vector<double> per_sample_ce(const Matrix& logits, std::span<const int> labels);

// Mean cross-entropy over the batch.
LossValue plain_ce(const Matrix& logits, std::span<const int> labels);

// sum_i omega[y_i] ce_i / sum_i omega[y_i]. omega is a constant (no gradient).
LossValue reweighted_ce(const Matrix& logits, std::span<const int> labels,
                        const CategoryDistribution& omega);

// Batch-mean prediction p_bar of softmax rows.
std::vector<double> mean_prediction(const Matrix& probs);

// KL(p_bar || omega) in nats with both sides floored at kLogClamp inside the
// logs. The gradient is taken w.r.t. the logits that produced `probs`, through
// every sample's softmax. omega is a constant.
LossValue rebalancing_loss(const Matrix& probs, const CategoryDistribution& omega);

}  // namespace vill
