#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "vill/data.hpp"
#include "vill/fairloss.hpp"
#include "vill/nn.hpp"

namespace vill {

// Virtual label distribution tracked across epochs.
//   counts[i] = #{target samples pseudo-labelled i}, total = N_t,
//   v = counts / total, omega = weight_vector(scale_distribution(v), alpha).
struct PseudoState {
  std::size_t epoch = 0;
  CategoryDistribution v;
  CategoryDistribution omega;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

// Argmax of the logits per row; ties go to the lowest class index.
std::vector<int> argmax_rows(const Matrix& logits);

// Pseudo-labels for every sample in `target`, evaluated in chunks of `chunk_rows`.
std::vector<int> pseudo_label(const Model& model, const Dataset& target, std::size_t chunk_rows = 512);

// Uniform v and omega, epoch 0, zero counts.
PseudoState init_pseudo_state(std::size_t num_classes, double alpha);

// Recounts from scratch (no accumulation across epochs) and increments epoch.
PseudoState update(const PseudoState& state, std::span<const int> pseudo_labels, double alpha);

// One row per state: epoch, total, count_i..., v_i..., omega_i...
void write_trajectory_header(std::ostream& out, std::size_t num_classes);
void write_trajectory_row(std::ostream& out, const PseudoState& state);

}  // namespace vill
