#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vill/config.hpp"
#include "vill/data.hpp"
#include "vill/fairloss.hpp"
#include "vill/metrics.hpp"
#include "vill/nn.hpp"
#include "vill/pseudo_tracker.hpp"

namespace vill {

// Rng::stream indices derived from TrainConfig::seed.
inline constexpr unsigned kInitStream = 0;
inline constexpr unsigned kSourceBatchStream = 1;
inline constexpr unsigned kTargetBatchStream = 2;

struct LossComponents {
  double total = 0.0;
  double reweighted_ce = 0.0;  // L_RW, or plain CE when re-weighting is off
  double alignment = 0.0;      // L_DA
  double rebalancing = 0.0;    // L_RB (0 when re-balancing is off)
};

struct EpochLog {
  std::size_t epoch = 0;
  PseudoState pseudo;    // state whose omega was used for the whole epoch
  LossComponents mean;   // averaged over the epoch's iterations
};

enum class RunStatus { ok, numeric_failure };

struct RunRecord {
  TrainConfig config;
  std::vector<EpochLog> epochs;
  std::optional<MetricsReport> final_metrics;  // present when the target has labels
  RunStatus status = RunStatus::ok;
  std::string failure;  // diagnostic for numeric_failure
  double wall_clock_seconds = 0.0;
};

struct IterationEvent {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  const CategoryDistribution* omega = nullptr;  // omega used for this step
  LossComponents losses;
};

// Optional instrumentation callbacks.
struct TrainHooks {
  // Called once per epoch after the refresh; pseudo_labels is empty at epoch 0.
  std::function<void(const PseudoState&, std::span<const int> pseudo_labels)> on_refresh;
  std::function<void(const IterationEvent&)> on_iteration;
};

struct TrainResult {
  Model model;
  RunRecord record;
};

struct ObjectiveStep {
  LossComponents losses;
  Gradients grads;
};

// Value and parameter gradient of L_RW + gamma * L_DA + beta * L_RB for one
// source batch and one target batch. With re-weighting off, L_RW is plain
// cross-entropy; the target batch is not evaluated when neither L_DA nor L_RB
// is active. Throws NumericError on a non-finite loss.
ObjectiveStep objective_step(const Model& model, const TrainConfig& config, const Matrix& source_x,
                             std::span<const int> source_y, const Matrix& target_x,
                             const CategoryDistribution& omega);

// One source and one target batch per iteration; minimises
//   L_RW + gamma * L_DA + beta * L_RB
// with omega refreshed from full-target pseudo-labels at the start of every
// epoch after the first. Target labels are never read during training.
TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target,
                  const TrainHooks& hooks = {});

// Indices for one batch: uniform draws with replacement.
std::vector<std::size_t> sample_batch(Rng& rng, std::size_t n, std::size_t batch_size);

struct AblationRun {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  std::optional<MetricsReport> metrics;
};

struct AblationCell {
  bool reweighting = false;
  bool rebalancing = false;
  std::vector<AblationRun> runs;

  // Aggregates over successful runs, keyed by metric name
  // ("worst_<N>", "global", "class_mean").
  std::map<std::string, double> mean;
  std::map<std::string, double> median;
};

struct AblationResult {
  TrainConfig base;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationCell> cells;  // (off,off), (on,off), (off,on), (on,on)
};

// Runs the {re-weighting} x {re-balancing} grid for every seed. Cells may be
// evaluated concurrently; results do not depend on `threads`.
AblationResult ablate(const TrainConfig& config, const Dataset& source, const Dataset& target,
                      std::span<const std::uint64_t> seeds, unsigned threads = 0);

double median(std::vector<double> values);

}  // namespace vill
