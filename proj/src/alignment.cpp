#include "vill/alignment.hpp"

#include "vill/errors.hpp"

namespace vill {

std::string to_string(AlignmentKind kind) { return kind == AlignmentKind::moment ? "moment" : "none"; }

AlignmentKind alignment_from_string(const std::string& name) {
  if (name == "none") return AlignmentKind::none;
  if (name == "moment" || name == "moment_matching") return AlignmentKind::moment;
  throw ArgumentError("unknown alignment '" + name + "' (expected none or moment)");
}

Matrix covariance(const Matrix& x) {
  if (x.rows() < 2) throw ArgumentError("covariance: need at least two rows");
  const auto mu = column_mean(x);
  Matrix centered = x;
  for (std::size_t i = 0; i < centered.rows(); ++i) {
    auto r = centered.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= mu[j];
  }
  Matrix cov = matmul_tn(centered, centered);
  const double scale = 1.0 / static_cast<double>(x.rows() - 1);
  for (double& v : cov.data()) v *= scale;
  return cov;
}

AlignmentLoss alignment_loss(AlignmentKind kind, const Matrix& source_features,
                             const Matrix& target_features) {
  if (source_features.cols() != target_features.cols()) {
    throw ShapeError("alignment_loss: source and target feature dimensions differ");
  }
  if (source_features.rows() == 0 || target_features.rows() == 0) {
    throw ArgumentError("alignment_loss: empty batch");
  }
  AlignmentLoss out{0.0, Matrix(source_features.rows(), source_features.cols()),
                    Matrix(target_features.rows(), target_features.cols())};
  if (kind == AlignmentKind::none) return out;

  const std::size_t d = source_features.cols();
  const double bs = static_cast<double>(source_features.rows());
  const double bt = static_cast<double>(target_features.rows());
  const auto mu_s = column_mean(source_features);
  const auto mu_t = column_mean(target_features);

  std::vector<double> mean_diff(d);
  for (std::size_t j = 0; j < d; ++j) {
    mean_diff[j] = mu_s[j] - mu_t[j];
    out.value += mean_diff[j] * mean_diff[j];
  }
  for (std::size_t i = 0; i < source_features.rows(); ++i) {
    auto g = out.source_grad.row(i);
    for (std::size_t j = 0; j < d; ++j) g[j] = 2.0 * mean_diff[j] / bs;
  }
  for (std::size_t i = 0; i < target_features.rows(); ++i) {
    auto g = out.target_grad.row(i);
    for (std::size_t j = 0; j < d; ++j) g[j] = -2.0 * mean_diff[j] / bt;
  }

  if (source_features.rows() < 2 || target_features.rows() < 2) return out;

  const Matrix cov_s = covariance(source_features);
  const Matrix cov_t = covariance(target_features);
  Matrix cov_diff(d, d);
  for (std::size_t k = 0; k < cov_diff.size(); ++k) {
    const double diff = cov_s.data()[k] - cov_t.data()[k];
    cov_diff.data()[k] = diff;
    out.value += diff * diff;
  }

  // d/dx_i ||D||_F^2 = 4/(B-1) * D (x_i - mu) for the source side, negated for target.
  auto add_cov_grad = [&](const Matrix& x, const std::vector<double>& mu, double coeff, Matrix& grad) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto xi = x.row(i);
      auto g = grad.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < d; ++b) acc += cov_diff(a, b) * (xi[b] - mu[b]);
        g[a] += coeff * acc;
      }
    }
  };
  add_cov_grad(source_features, mu_s, 4.0 / (bs - 1.0), out.source_grad);
  add_cov_grad(target_features, mu_t, -4.0 / (bt - 1.0), out.target_grad);
  return out;
}

}  // namespace vill
