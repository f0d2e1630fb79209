#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vill/data.hpp"
#include "vill/nn.hpp"

namespace vill {

struct MetricsReport {
  std::size_t num_classes = 0;
  // nullopt for classes with zero support; they are excluded from worst-N.
  std::vector<std::optional<double>> per_class_acc;
  std::vector<std::size_t> support;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  double global_acc = 0.0;      // total correct / total samples
  double class_mean_acc = 0.0;  // mean over classes with support
  // Keyed by the requested N; the effective N is min(N, #classes with support).
  std::map<std::size_t, double> worst_n;
  std::vector<std::string> warnings;
};

// Mean of the n smallest entries. Throws ArgumentError unless 1 <= n <= size.
double worst_n(std::span<const double> per_class_acc, std::size_t n);

MetricsReport compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                              std::size_t num_classes, std::span<const std::size_t> worst_n_values);

// Requires a labelled dataset.
MetricsReport evaluate(const Model& model, const Dataset& labeled,
                       std::span<const std::size_t> worst_n_values = std::vector<std::size_t>{5, 10});

}  // namespace vill
