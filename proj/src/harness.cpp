#include "vill/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <thread>

#include "vill/alignment.hpp"
#include "vill/errors.hpp"

namespace vill {
namespace {

void check_inputs(const TrainConfig& config, const Dataset& source, const Dataset& target) {
  config.validate();
  if (!source.labels) throw ArgumentError("train: source dataset must be labelled");
  source.validate();
  if (source.size() == 0 || target.size() == 0) throw ArgumentError("train: empty dataset");
  if (source.dim() != target.dim()) throw ArgumentError("train: source and target feature dimensions differ");
  if (source.num_classes < 2) throw ArgumentError("train: need at least 2 classes");
  if (target.num_classes != 0 && target.num_classes != source.num_classes) {
    throw ArgumentError("train: source and target class counts differ");
  }
}

std::vector<int> gather_labels(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

void scale_in_place(Matrix& m, double s) {
  for (double& x : m.data()) x *= s;
}

struct EpochAccumulator {
  LossComponents sum;
  std::size_t count = 0;

  void add(const LossComponents& l) {
    sum.total += l.total;
    sum.reweighted_ce += l.reweighted_ce;
    sum.alignment += l.alignment;
    sum.rebalancing += l.rebalancing;
    ++count;
  }
  LossComponents mean() const {
    const double n = static_cast<double>(std::max<std::size_t>(count, 1));
    return {sum.total / n, sum.reweighted_ce / n, sum.alignment / n, sum.rebalancing / n};
  }
};

}  // namespace

ObjectiveStep objective_step(const Model& model, const TrainConfig& config, const Matrix& source_x,
                             std::span<const int> source_y, const Matrix& target_x,
                             const CategoryDistribution& omega) {
  const bool use_alignment = config.alignment != AlignmentKind::none;
  const bool needs_target = use_alignment || config.enable_rebalancing;
  const bool target_has_grad = (use_alignment && config.gamma > 0.0) ||
                               (config.enable_rebalancing && config.beta > 0.0);

  const auto src_trace = forward_trace(model, source_x);
  LossValue rw = config.enable_reweighting ? reweighted_ce(src_trace.result.logits, source_y, omega)
                                           : plain_ce(src_trace.result.logits, source_y);
  ObjectiveStep step;
  step.losses.reweighted_ce = rw.value;

  std::optional<ForwardTrace> tgt_trace;
  AlignmentLoss da;
  LossValue rb;
  if (needs_target) {
    tgt_trace = forward_trace(model, target_x);
    if (use_alignment) {
      da = alignment_loss(config.alignment, src_trace.features(), tgt_trace->features());
      step.losses.alignment = da.value;
    }
    if (config.enable_rebalancing) {
      rb = rebalancing_loss(tgt_trace->result.probs, omega);
      step.losses.rebalancing = rb.value;
    }
  }
  step.losses.total = step.losses.reweighted_ce + config.gamma * step.losses.alignment +
                      config.beta * step.losses.rebalancing;
  if (!std::isfinite(step.losses.total)) throw NumericError("non-finite training loss");

  if (use_alignment) {
    scale_in_place(da.source_grad, config.gamma);
    step.grads = backward(model, src_trace, rw.logit_grad, &da.source_grad);
  } else {
    step.grads = backward(model, src_trace, rw.logit_grad);
  }
  if (target_has_grad) {
    Matrix logit_grad = config.enable_rebalancing && config.beta > 0.0
                            ? std::move(rb.logit_grad)
                            : Matrix(tgt_trace->result.logits.rows(), tgt_trace->result.logits.cols());
    scale_in_place(logit_grad, config.beta);
    if (use_alignment) {
      scale_in_place(da.target_grad, config.gamma);
      accumulate(step.grads, backward(model, *tgt_trace, logit_grad, &da.target_grad));
    } else {
      accumulate(step.grads, backward(model, *tgt_trace, logit_grad));
    }
  }
  return step;
}

std::vector<std::size_t> sample_batch(Rng& rng, std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target,
                  const TrainHooks& hooks) {
  check_inputs(config, source, target);
  const auto started = std::chrono::steady_clock::now();
  const std::size_t num_classes = source.num_classes;

  Rng init_rng = Rng::stream(config.seed, kInitStream);
  Rng source_rng = Rng::stream(config.seed, kSourceBatchStream);
  Rng target_rng = Rng::stream(config.seed, kTargetBatchStream);

  TrainResult result{init_model(source.dim(), config.hidden_dims, num_classes, init_rng), {}};
  Model& model = result.model;
  RunRecord& record = result.record;
  record.config = config;
  OptimState optim = make_optim_state(model, config.learning_rate, config.momentum);
  PseudoState pseudo = init_pseudo_state(num_classes, config.alpha);
  std::size_t iteration = 0;

  auto fail = [&](const std::string& why) {
    record.status = RunStatus::numeric_failure;
    record.failure = "epoch " + std::to_string(record.epochs.size()) + ", iteration " +
                     std::to_string(iteration) + ": " + why;
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  };

  try {
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::vector<int> pseudo_labels;
      if (epoch > 0) {
        pseudo_labels = pseudo_label(model, target);
        pseudo = update(pseudo, pseudo_labels, config.alpha);
      }
      if (hooks.on_refresh) hooks.on_refresh(pseudo, pseudo_labels);

      EpochAccumulator acc;
      for (iteration = 0; iteration < config.iterations_per_epoch; ++iteration) {
        const auto src_idx = sample_batch(source_rng, source.size(), config.batch_size);
        const auto tgt_idx = sample_batch(target_rng, target.size(), config.batch_size);
        auto step = objective_step(model, config, gather_rows(source.features, src_idx),
                                   gather_labels(*source.labels, src_idx),
                                   gather_rows(target.features, tgt_idx), pseudo.omega);
        if (hooks.on_iteration) hooks.on_iteration({epoch, iteration, &pseudo.omega, step.losses});
        acc.add(step.losses);
        sgd_step(model, step.grads, optim);
      }
      record.epochs.push_back({epoch, pseudo, acc.mean()});
    }
  } catch (const NumericError& e) {
    return fail(e.what());
  }

  if (target.labels) record.final_metrics = evaluate(model, target, config.worst_n_values);
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

AblationResult ablate(const TrainConfig& config, const Dataset& source, const Dataset& target,
                      std::span<const std::uint64_t> seeds, unsigned threads) {
  check_inputs(config, source, target);
  if (!target.labels) throw ArgumentError("ablate: target labels are required for evaluation");
  if (seeds.empty()) throw ArgumentError("ablate: no seeds");

  AblationResult result{config, {seeds.begin(), seeds.end()}, {}};
  for (bool rb : {false, true}) {
    for (bool rw : {false, true}) {
      AblationCell cell;
      cell.reweighting = rw;
      cell.rebalancing = rb;
      cell.runs.resize(seeds.size());
      result.cells.push_back(std::move(cell));
    }
  }

  struct Job {
    std::size_t cell;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (std::size_t r = 0; r < seeds.size(); ++r) jobs.push_back({c, r});
  }
  auto run_job = [&](const Job& job) {
    TrainConfig cfg = config;
    cfg.enable_reweighting = result.cells[job.cell].reweighting;
    cfg.enable_rebalancing = result.cells[job.cell].rebalancing;
    cfg.seed = seeds[job.run];
    auto trained = train(cfg, source, target);
    return AblationRun{cfg.seed, trained.record.status, std::move(trained.record.final_metrics)};
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  // Each job writes only its own slot, so any execution order gives the same result.
  std::size_t next = 0;
  while (next < jobs.size()) {
    std::vector<std::pair<Job, std::future<AblationRun>>> wave;
    for (unsigned t = 0; t < threads && next < jobs.size(); ++t, ++next) {
      const Job job = jobs[next];
      wave.emplace_back(job, std::async(threads > 1 ? std::launch::async : std::launch::deferred, run_job, job));
    }
    for (auto& [job, fut] : wave) result.cells[job.cell].runs[job.run] = fut.get();
  }

  for (auto& cell : result.cells) {
    std::map<std::string, std::vector<double>> columns;
    for (const auto& run : cell.runs) {
      if (run.status != RunStatus::ok || !run.metrics) continue;
      for (const auto& [n, value] : run.metrics->worst_n) columns["worst_" + std::to_string(n)].push_back(value);
      columns["global"].push_back(run.metrics->global_acc);
      columns["class_mean"].push_back(run.metrics->class_mean_acc);
    }
    for (auto& [name, values] : columns) {
      double sum = 0.0;
      for (double v : values) sum += v;
      cell.mean[name] = sum / static_cast<double>(values.size());
      cell.median[name] = median(values);
    }
  }
  return result;
}

}  // namespace vill
