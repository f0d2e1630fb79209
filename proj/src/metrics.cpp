#include "vill/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "vill/errors.hpp"
#include "vill/pseudo_tracker.hpp"

namespace vill {

double worst_n(std::span<const double> per_class_acc, std::size_t n) {
  if (n == 0 || n > per_class_acc.size()) {
    throw ArgumentError("worst_n: N=" + std::to_string(n) + " outside [1, " +
                        std::to_string(per_class_acc.size()) + "]");
  }
  std::vector<double> sorted(per_class_acc.begin(), per_class_acc.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n), sorted.end());
  return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

MetricsReport compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                              std::size_t num_classes, std::span<const std::size_t> worst_n_values) {
  if (truth.size() != predicted.size()) throw ArgumentError("compute_metrics: length mismatch");
  if (truth.empty()) throw ArgumentError("compute_metrics: no samples");
  if (num_classes < 2) throw ArgumentError("compute_metrics: need C >= 2");

  MetricsReport r;
  r.num_classes = num_classes;
  r.support.assign(num_classes, 0);
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    const int p = predicted[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes || p < 0 ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw ArgumentError("compute_metrics: label out of range");
    }
    ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
    ++r.support[static_cast<std::size_t>(y)];
    if (y == p) ++correct;
  }
  r.global_acc = static_cast<double>(correct) / static_cast<double>(truth.size());

  std::vector<double> present;
  r.per_class_acc.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (r.support[c] == 0) {
      r.warnings.push_back("class " + std::to_string(c) + " has no support; excluded from worst-N");
      continue;
    }
    const double acc = static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.support[c]);
    r.per_class_acc[c] = acc;
    present.push_back(acc);
  }
  r.class_mean_acc = std::accumulate(present.begin(), present.end(), 0.0) / static_cast<double>(present.size());
  for (std::size_t n : worst_n_values) {
    if (n == 0) throw ArgumentError("compute_metrics: worst-N needs N >= 1");
    if (n > present.size()) {
      r.warnings.push_back("worst-" + std::to_string(n) + " uses the " + std::to_string(present.size()) +
                           " classes with support");
    }
    r.worst_n[n] = worst_n(present, std::min(n, present.size()));
  }
  return r;
}

MetricsReport evaluate(const Model& model, const Dataset& labeled,
                       std::span<const std::size_t> worst_n_values) {
  if (!labeled.labels) throw ArgumentError("evaluate: dataset has no ground-truth labels");
  labeled.validate();
  if (labeled.num_classes > model.num_classes()) throw ShapeError("evaluate: dataset has more classes than the model");
  const auto predicted = pseudo_label(model, labeled);
  return compute_metrics(*labeled.labels, predicted, model.num_classes(), worst_n_values);
}

}  // namespace vill
