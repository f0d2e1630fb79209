#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace vill::oracle {

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double step = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// Entry-wise relative error with a floor on the denominator, so entries that
// are analytically ~0 are compared on an absolute 1e-6 scale.
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Cross-entropy of one row by the textbook formula in long double.
inline long double direct_ce(std::span<const double> logits, int label) {
  long double denom = 0.0L;
  for (double q : logits) denom += std::exp(static_cast<long double>(q));
  return -std::log(std::exp(static_cast<long double>(logits[static_cast<std::size_t>(label)])) / denom);
}

// sum_i w[y_i] ce_i / sum_i w[y_i], straight from the definition.
inline double direct_reweighted_ce(const std::vector<std::vector<double>>& logits, const std::vector<int>& labels,
                                   const std::vector<double>& omega) {
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const long double w = omega[static_cast<std::size_t>(labels[i])];
    num += w * direct_ce(logits[i], labels[i]);
    den += w;
  }
  return static_cast<double>(num / den);
}

// (1 + a e^{-E_i}) / sum_k (1 + a e^{-E_k}) in long double.
inline std::vector<double> direct_weights(const std::vector<double>& scaled, double alpha) {
  std::vector<long double> w(scaled.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    w[i] = 1.0L + static_cast<long double>(alpha) * std::exp(-static_cast<long double>(scaled[i]));
    total += w[i];
  }
  std::vector<double> out(scaled.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(w[i] / total);
  return out;
}

// Shannon entropy in nats (0 log 0 = 0).
inline double entropy(std::span<const double> p) {
  long double h = 0.0L;
  for (double x : p) {
    if (x > 0.0) h -= static_cast<long double>(x) * std::log(static_cast<long double>(x));
  }
  return static_cast<double>(h);
}

inline double kl(std::span<const double> p, std::span<const double> q) {
  long double d = 0.0L;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) d += static_cast<long double>(p[k]) * std::log(static_cast<long double>(p[k]) / q[k]);
  }
  return static_cast<double>(d);
}

// Minimum mean over every n-subset, by enumerating index combinations.
inline double worst_n_by_enumeration(const std::vector<double>& acc, std::size_t n) {
  const std::size_t c = acc.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(c, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n), true);
  // prev_permutation over a sorted-descending mask visits every combination once.
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      if (pick[i]) sum += acc[i];
    }
    best = std::min(best, sum / static_cast<double>(n));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Row-wise max scan returning the first index that attains the maximum.
inline std::vector<int> argmax_scan(const std::vector<std::vector<double>>& rows) {
  std::vector<int> out;
  for (const auto& r : rows) {
    int best = 0;
    for (std::size_t k = 1; k < r.size(); ++k) {
      if (r[k] > r[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    out.push_back(best);
  }
  return out;
}

// Counting pipeline v -> E -> omega for a label vector, from the definitions.
inline std::vector<double> omega_from_labels(const std::vector<int>& labels, std::size_t num_classes, double alpha) {
  std::vector<double> scaled(num_classes, 0.0);
  for (int y : labels) scaled[static_cast<std::size_t>(y)] += 1.0;
  for (double& e : scaled) e = e / static_cast<double>(labels.size()) * static_cast<double>(num_classes);
  return direct_weights(scaled, alpha);
}

}  // namespace vill::oracle
