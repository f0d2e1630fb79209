#include "vill/pseudo_tracker.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "vill/errors.hpp"
#include "vill/format.hpp"

namespace vill {

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> labels(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto q = logits.row(i);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    labels[i] = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
  }
  return labels;
}

std::vector<int> pseudo_label(const Model& model, const Dataset& target, std::size_t chunk_rows) {
  const std::size_t n = target.features.rows();
  if (n == 0) throw ArgumentError("pseudo_label: empty target dataset");
  if (target.features.cols() != model.input_dim()) throw ShapeError("pseudo_label: feature dimension mismatch");
  chunk_rows = std::max<std::size_t>(chunk_rows, 1);

  std::vector<int> labels;
  labels.reserve(n);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk_rows) {
    const std::size_t stop = std::min(n, start + chunk_rows);
    idx.resize(stop - start);
    for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
    const auto chunk = argmax_rows(forward(model, gather_rows(target.features, idx)).logits);
    labels.insert(labels.end(), chunk.begin(), chunk.end());
  }
  return labels;
}

PseudoState init_pseudo_state(std::size_t num_classes, double alpha) {
  if (num_classes < 2) throw ArgumentError("init_pseudo_state: need C >= 2");
  if (!(alpha > 0.0)) throw ArgumentError("init_pseudo_state: alpha must be positive");
  auto uniform = CategoryDistribution::uniform(num_classes);
  return PseudoState{0, uniform, uniform, std::vector<std::size_t>(num_classes, 0), 0};
}

PseudoState update(const PseudoState& state, std::span<const int> pseudo_labels, double alpha) {
  const std::size_t num_classes = state.counts.size();
  if (pseudo_labels.empty()) throw ArgumentError("update: no pseudo-labels");
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : pseudo_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ArgumentError("update: pseudo-label " + std::to_string(y) + " out of range");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  const std::size_t total = pseudo_labels.size();
  std::vector<double> v(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    v[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  CategoryDistribution dist(std::move(v));
  auto omega = weight_vector(scale_distribution(dist), alpha);
  return PseudoState{state.epoch + 1, std::move(dist), std::move(omega), std::move(counts), total};
}

void write_trajectory_header(std::ostream& out, std::size_t num_classes) {
  out << "epoch,total";
  for (const char* prefix : {"count_", "v_", "omega_"}) {
    for (std::size_t i = 0; i < num_classes; ++i) out << ',' << prefix << i;
  }
  out << '\n';
}

void write_trajectory_row(std::ostream& out, const PseudoState& state) {
  out << state.epoch << ',' << state.total;
  for (std::size_t c : state.counts) out << ',' << c;
  for (double x : state.v.values()) out << ',' << format_double(x);
  for (double x : state.omega.values()) out << ',' << format_double(x);
  out << '\n';
}

}  // namespace vill
