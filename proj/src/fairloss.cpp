#include "vill/fairloss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vill/errors.hpp"
#include "vill/nn.hpp"

namespace vill {
namespace {

void check_batch(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) throw ArgumentError("loss: empty batch");
  if (labels.size() != logits.rows()) throw ArgumentError("loss: label count does not match batch size");
  if (logits.cols() < 2) throw ShapeError("loss: need at least 2 classes");
  const int num_classes = static_cast<int>(logits.cols());
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ArgumentError("loss: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
  }
}

// grad_i = scale_i * (softmax(q_i) - onehot(y_i))
LossValue weighted_ce(const Matrix& logits, std::span<const int> labels,
                      std::span<const double> sample_weights) {
  const auto ce = per_sample_ce(logits, labels);
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < ce.size(); ++i) {
    weight_sum += sample_weights[i];
    weighted += sample_weights[i] * ce[i];
  }
  LossValue out{weighted / weight_sum, softmax_rows(logits)};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto g = out.logit_grad.row(i);
    g[static_cast<std::size_t>(labels[i])] -= 1.0;
    const double s = sample_weights[i] / weight_sum;
    for (double& x : g) x *= s;
  }
  return out;
}

}  // namespace

CategoryDistribution::CategoryDistribution(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw ArgumentError("category distribution needs C >= 2");
  double sum = 0.0;
  for (double x : values_) {
    if (!std::isfinite(x) || x < 0.0) throw ArgumentError("category distribution has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw ArgumentError("category distribution sums to " + std::to_string(sum));
  }
}

CategoryDistribution CategoryDistribution::uniform(std::size_t num_classes) {
  if (num_classes < 2) throw ArgumentError("category distribution needs C >= 2");
  return CategoryDistribution(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

ScaledDistribution::ScaledDistribution(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw ArgumentError("scaled distribution needs C >= 2");
  for (double x : values_) {
    if (!std::isfinite(x) || x < 0.0) throw ArgumentError("scaled distribution has a negative or non-finite entry");
  }
}

ScaledDistribution scale_distribution(const CategoryDistribution& v) {
  const double c = static_cast<double>(v.size());
  std::vector<double> e(v.size());
  std::transform(v.values().begin(), v.values().end(), e.begin(), [c](double x) { return x * c; });
  return ScaledDistribution(std::move(e));
}

CategoryDistribution weight_vector(const ScaledDistribution& scaled, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("weight_vector: alpha must be positive");
  std::vector<double> w(scaled.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 1.0 + alpha * std::exp(-scaled[i]);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return CategoryDistribution(std::move(w));
}

std::vector<double> per_sample_ce(const Matrix& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  std::vector<double> ce(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto q = logits.row(i);
    const double mx = *std::max_element(q.begin(), q.end());
    double sum = 0.0;
    for (double x : q) sum += std::exp(x - mx);
    ce[i] = mx + std::log(sum) - q[static_cast<std::size_t>(labels[i])];
  }
  return ce;
}

LossValue plain_ce(const Matrix& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  const std::vector<double> ones(logits.rows(), 1.0);
  return weighted_ce(logits, labels, ones);
}

LossValue reweighted_ce(const Matrix& logits, std::span<const int> labels,
                        const CategoryDistribution& omega) {
  check_batch(logits, labels);
  if (omega.size() != logits.cols()) throw ShapeError("reweighted_ce: omega length does not match class count");
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w[i] = omega[static_cast<std::size_t>(labels[i])];
    if (!(w[i] > 0.0)) throw ArgumentError("reweighted_ce: omega must be strictly positive");
  }
  return weighted_ce(logits, labels, w);
}

std::vector<double> mean_prediction(const Matrix& probs) {
  if (probs.rows() == 0) throw ArgumentError("mean_prediction: empty batch");
  return column_mean(probs);
}

LossValue rebalancing_loss(const Matrix& probs, const CategoryDistribution& omega) {
  if (probs.rows() == 0) throw ArgumentError("rebalancing_loss: empty batch");
  if (omega.size() != probs.cols()) throw ShapeError("rebalancing_loss: omega length does not match class count");
  for (double w : omega.values()) {
    if (!(w > 0.0)) throw ArgumentError("rebalancing_loss: omega must be strictly positive");
  }
  const std::size_t num_classes = probs.cols();
  const auto p_bar = mean_prediction(probs);

  double value = 0.0;
  std::vector<double> d_pbar(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double log_ratio = std::log(std::max(p_bar[k], kLogClamp)) - std::log(std::max(omega[k], kLogClamp));
    value += p_bar[k] * log_ratio;
    // Below the floor the log term is constant, so only the linear factor varies.
    d_pbar[k] = log_ratio + (p_bar[k] > kLogClamp ? 1.0 : 0.0);
  }

  // dL/dq_ij = p_ij (g_j - <g, p_i>) with g = d_pbar / B.
  const double inv_b = 1.0 / static_cast<double>(probs.rows());
  Matrix grad(probs.rows(), num_classes);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    double dot = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) dot += d_pbar[k] * p[k];
    auto g = grad.row(i);
    for (std::size_t k = 0; k < num_classes; ++k) g[k] = inv_b * p[k] * (d_pbar[k] - dot);
  }
  return {value, std::move(grad)};
}

}  // namespace vill
