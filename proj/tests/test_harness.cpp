#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "reference_loop.hpp"
#include "vill/errors.hpp"
#include "vill/harness.hpp"

using namespace vill;

namespace {

ShiftSpec small_spec(std::uint64_t seed = 3) {
  ShiftSpec s;
  s.num_classes = 3;
  s.dim = 4;
  s.source_priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  s.target_priors = {0.6, 0.3, 0.1};
  s.mean_shift = {0.3, 0.0, 0.0, 0.0};
  s.class_separation = 2.0;
  s.noise_scale = 0.8;
  s.n_source = 300;
  s.n_target = 300;
  s.seed = seed;
  return s;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.iterations_per_epoch = 20;
  c.batch_size = 16;
  c.hidden_dims = {6};
  c.worst_n_values = {1, 2};
  return c;
}

bool same_bits(const Model& a, const Model& b) {
  const auto pa = flatten(a);
  const auto pb = flatten(b);
  return pa.size() == pb.size() && std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0;
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("objective_step gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::vector<std::size_t> hidden{5, 4};
    const Model model = init_model(3, hidden, 3, rng);
    const Matrix xs = random_matrix(rng, 6, 3);
    const Matrix xt = random_matrix(rng, 5, 3);
    std::vector<int> ys(6);
    for (int& y : ys) y = static_cast<int>(rng.below(3));
    const CategoryDistribution omega({0.5, 0.3, 0.2});

    TrainConfig cfg;
    cfg.gamma = 0.7;
    cfg.beta = 0.4;
    cfg.enable_reweighting = seed % 2 == 0;
    cfg.alignment = seed % 3 == 2 ? AlignmentKind::none : AlignmentKind::moment;

    const auto step = objective_step(model, cfg, xs, ys, xt, omega);
    const auto analytic = flatten(step.grads);
    const auto numeric = oracle::central_difference(
        [&](const std::vector<double>& p) {
          Model probe = model;
          assign_parameters(probe, p);
          return objective_step(probe, cfg, xs, ys, xt, omega).losses.total;
        },
        flatten(model));
    CHECK(oracle::max_relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("objective_step total is the weighted sum of its parts") {
  Rng rng(11);
  const std::vector<std::size_t> hidden{4};
  const Model model = init_model(3, hidden, 3, rng);
  const Matrix xs = random_matrix(rng, 8, 3);
  const Matrix xt = random_matrix(rng, 8, 3);
  const std::vector<int> ys{0, 1, 2, 0, 1, 2, 0, 0};
  const CategoryDistribution omega({0.2, 0.3, 0.5});
  TrainConfig cfg;
  cfg.gamma = 0.3;
  cfg.beta = 0.25;
  const auto s = objective_step(model, cfg, xs, ys, xt, omega);
  CHECK(std::abs(s.losses.total - (s.losses.reweighted_ce + 0.3 * s.losses.alignment + 0.25 * s.losses.rebalancing)) <=
        1e-9);
  CHECK(s.losses.alignment > 0.0);
  CHECK(s.losses.rebalancing > 0.0);

  cfg.enable_rebalancing = false;
  cfg.alignment = AlignmentKind::none;
  const auto plain = objective_step(model, cfg, xs, ys, xt, omega);
  CHECK(plain.losses.alignment == 0.0);
  CHECK(plain.losses.rebalancing == 0.0);
  CHECK(plain.losses.total == plain.losses.reweighted_ce);
}

TEST_CASE("flags off reproduces the plain cross-entropy reference loop bit for bit") {
  const auto data = generate(small_spec());
  for (auto align : {AlignmentKind::none}) {
    TrainConfig cfg = small_config();
    cfg.enable_reweighting = false;
    cfg.enable_rebalancing = false;
    cfg.alignment = align;
    const auto trained = train(cfg, data.source, data.target);
    CHECK(trained.record.status == RunStatus::ok);
    CHECK(same_bits(trained.model, oracle::plain_ce_reference(cfg, data.source)));
  }
}

TEST_CASE("beta = 0 matches re-balancing off") {
  const auto data = generate(small_spec());
  TrainConfig a = small_config();
  a.beta = 0.0;
  TrainConfig b = small_config();
  b.enable_rebalancing = false;
  CHECK(same_bits(train(a, data.source, data.target).model, train(b, data.source, data.target).model));
}

TEST_CASE("training is deterministic and seed dependent") {
  const auto data = generate(small_spec());
  const auto cfg = small_config();
  const auto a = train(cfg, data.source, data.target);
  const auto b = train(cfg, data.source, data.target);
  CHECK(same_bits(a.model, b.model));
  REQUIRE(a.record.final_metrics);
  CHECK(a.record.final_metrics->global_acc == b.record.final_metrics->global_acc);
  auto other = cfg;
  other.seed = 1;
  CHECK_FALSE(same_bits(a.model, train(other, data.source, data.target).model));
}

TEST_CASE("separable two-class task is learned") {
  ShiftSpec s;
  s.num_classes = 2;
  s.dim = 2;
  s.source_priors = s.target_priors = {0.5, 0.5};
  s.class_separation = 4.0;
  s.noise_scale = 0.3;
  s.n_source = s.n_target = 400;
  s.seed = 5;
  const auto data = generate(s);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.iterations_per_epoch = 50;
  cfg.worst_n_values = {1};
  const auto trained = train(cfg, data.source, data.target);
  REQUIRE(trained.record.final_metrics);
  CHECK(trained.record.final_metrics->global_acc >= 0.95);
  CHECK(trained.record.epochs.size() == 5);
  CHECK(trained.record.epochs.back().mean.total < trained.record.epochs.front().mean.total);
}

TEST_CASE("epoch log and refresh schedule") {
  const auto data = generate(small_spec());
  const auto cfg = small_config();
  std::vector<std::size_t> refresh_epochs;
  std::size_t iterations = 0;
  TrainHooks hooks;
  hooks.on_refresh = [&](const PseudoState& st, std::span<const int> labels) {
    refresh_epochs.push_back(st.epoch);
    if (st.epoch == 0) {
      CHECK(labels.empty());
    } else {
      CHECK(labels.size() == data.target.size());
      const auto expected = oracle::omega_from_labels({labels.begin(), labels.end()}, 3, cfg.alpha);
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(st.omega[k] - expected[k]) < 1e-15);
    }
  };
  hooks.on_iteration = [&](const IterationEvent&) { ++iterations; };
  const auto trained = train(cfg, data.source, data.target, hooks);
  CHECK(refresh_epochs == std::vector<std::size_t>{0, 1, 2});
  CHECK(iterations == cfg.epochs * cfg.iterations_per_epoch);
  REQUIRE(trained.record.epochs.size() == 3);
  for (double w : trained.record.epochs[0].pseudo.omega.values()) CHECK(w == 1.0 / 3.0);
  for (const auto& log : trained.record.epochs) {
    const auto& m = log.mean;
    CHECK(std::abs(m.total - (m.reweighted_ce + cfg.gamma * m.alignment + cfg.beta * m.rebalancing)) <= 1e-9);
  }
}

TEST_CASE("unlabelled target trains without final metrics") {
  auto data = generate(small_spec());
  data.target.labels.reset();
  const auto trained = train(small_config(), data.source, data.target);
  CHECK(trained.record.status == RunStatus::ok);
  CHECK_FALSE(trained.record.final_metrics);
}

TEST_CASE("numeric blow-up yields a failure record") {
  const auto data = generate(small_spec());
  auto cfg = small_config();
  cfg.learning_rate = 1e308;
  const auto trained = train(cfg, data.source, data.target);
  CHECK(trained.record.status == RunStatus::numeric_failure);
  CHECK(trained.record.failure.find("epoch") != std::string::npos);
  CHECK_FALSE(trained.record.final_metrics);
}

TEST_CASE("mismatched inputs are rejected") {
  const auto data = generate(small_spec());
  auto wide = small_spec();
  wide.dim = 5;
  wide.mean_shift.clear();
  const auto other = generate(wide);
  CHECK_THROWS_AS(train(small_config(), data.source, other.target), ArgumentError);

  auto four = small_spec();
  four.num_classes = 4;
  four.source_priors = four.target_priors = {0.25, 0.25, 0.25, 0.25};
  CHECK_THROWS_AS(train(small_config(), data.source, generate(four).target), ArgumentError);

  auto unlabeled = data.source;
  unlabeled.labels.reset();
  CHECK_THROWS_AS(train(small_config(), unlabeled, data.target), ArgumentError);
}

TEST_CASE("ablation grid layout and consistency with train") {
  const auto data = generate(small_spec());
  const auto cfg = small_config();
  const std::vector<std::uint64_t> seeds{0, 1};
  const auto res = ablate(cfg, data.source, data.target, seeds, 2);
  REQUIRE(res.cells.size() == 4);
  const bool expected[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(res.cells[c].reweighting == expected[c][0]);
    CHECK(res.cells[c].rebalancing == expected[c][1]);
    REQUIRE(res.cells[c].runs.size() == 2);
    CHECK(res.cells[c].median.count("worst_1") == 1);
    CHECK(res.cells[c].median.count("worst_2") == 1);
    CHECK(res.cells[c].median.count("global") == 1);
    CHECK(res.cells[c].median.count("class_mean") == 1);
  }
  auto direct = cfg;
  direct.enable_reweighting = false;
  direct.enable_rebalancing = false;
  direct.seed = 1;
  const auto single = train(direct, data.source, data.target);
  CHECK(res.cells[0].runs[1].metrics->global_acc == single.record.final_metrics->global_acc);

  const auto serial = ablate(cfg, data.source, data.target, seeds, 1);
  for (std::size_t c = 0; c < 4; ++c) CHECK(serial.cells[c].median == res.cells[c].median);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
}
