#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "vill/errors.hpp"
#include "vill/fairloss.hpp"
#include "vill/nn.hpp"
#include "vill/rng.hpp"

using namespace vill;

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t c, double min_entry = 0.0) {
  std::vector<double> v(c);
  double s = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform()) + min_entry;
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

Matrix random_logits(Rng& rng, std::size_t b, std::size_t c, double scale = 2.0) {
  Matrix m(b, c);
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

std::vector<int> random_labels(Rng& rng, std::size_t b, std::size_t c) {
  std::vector<int> y(b);
  for (int& v : y) v = static_cast<int>(rng.below(c));
  return y;
}

// FD of a value-only function of the logits versus the analytic logit gradient.
template <class ValueFn>
double logit_grad_error(const Matrix& logits, const Matrix& analytic, ValueFn&& value) {
  const auto numeric = oracle::central_difference(
      [&](const std::vector<double>& flat) { return value(Matrix(logits.rows(), logits.cols(), flat)); },
      logits.data());
  return oracle::max_relative_error(analytic.data(), numeric);
}

}  // namespace

TEST_CASE("scale_distribution") {
  auto e = scale_distribution(CategoryDistribution::uniform(4));
  for (double x : e.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));

  e = scale_distribution(CategoryDistribution({0.5, 0.25, 0.25}));
  CHECK(e[0] == 1.5);
  CHECK(e[1] == 0.75);
  CHECK(e[2] == 0.75);

  e = scale_distribution(CategoryDistribution({1.0, 0.0}));
  CHECK(e[0] == 2.0);
  CHECK(e[1] == 0.0);
}

TEST_CASE("scaled distribution has unit mean") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_simplex(rng, 2 + rng.below(15));
    const auto e = scale_distribution(CategoryDistribution(v));
    const double mean = std::accumulate(e.values().begin(), e.values().end(), 0.0) / static_cast<double>(e.size());
    CHECK(std::abs(mean - 1.0) <= 1e-9);
  }
}

TEST_CASE("weight_vector examples") {
  auto w = weight_vector(ScaledDistribution({1.0, 1.0, 1.0}), 5.0);
  for (double x : w.values()) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // (6, 1 + 5 e^-2) / (7 + 5 e^-2)
  w = weight_vector(ScaledDistribution({0.0, 2.0}), 5.0);
  CHECK(std::abs(w[0] - 0.781588238804947924) < 1e-15);
  CHECK(std::abs(w[1] - 0.218411761195052076) < 1e-15);
  CHECK(std::abs(w[0] - 0.78159) < 1e-5);
  CHECK(std::abs(w[1] - 0.21841) < 1e-5);

  w = weight_vector(ScaledDistribution({0.0, 2.0, 0.5}), 1e-12);
  for (double x : w.values()) CHECK(std::abs(x - 1.0 / 3.0) < 1e-12);

  CHECK_THROWS_AS(weight_vector(ScaledDistribution({1.0, 1.0}), 0.0), ArgumentError);
  CHECK_THROWS_AS(weight_vector(ScaledDistribution({1.0, 1.0}), -1.0), ArgumentError);
  CHECK_THROWS_AS(ScaledDistribution({1.0, -0.1}), ArgumentError);
}

TEST_CASE("weight_vector: simplex, positivity, strict order reversal, permutation equivariance") {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const std::size_t c = 2 + rng.below(19);
    const double alpha = rng.uniform(0.1, 20.0);
    const auto v = random_simplex(rng, c);
    const auto e = scale_distribution(CategoryDistribution(v));
    const auto w = weight_vector(e, alpha);

    const double sum = std::accumulate(w.values().begin(), w.values().end(), 0.0);
    REQUIRE(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < c; ++i) {
      REQUIRE(w[i] > 0.0);
      for (std::size_t j = 0; j < c; ++j) {
        if (e[i] < e[j]) REQUIRE(w[i] > w[j]);
      }
    }
    const auto expected = oracle::direct_weights(e.values(), alpha);
    for (std::size_t i = 0; i < c; ++i) REQUIRE(std::abs(w[i] - expected[i]) <= 1e-15);

    std::vector<std::size_t> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::vector<double> e_perm(c);
    for (std::size_t i = 0; i < c; ++i) e_perm[i] = e[perm[i]];
    const auto w_perm = weight_vector(ScaledDistribution(e_perm), alpha);
    for (std::size_t i = 0; i < c; ++i) REQUIRE(std::abs(w_perm[i] - w[perm[i]]) <= 1e-15);
  }
}

TEST_CASE("category distribution validation") {
  CHECK_THROWS_AS(CategoryDistribution({1.0}), ArgumentError);
  CHECK_THROWS_AS(CategoryDistribution({0.6, 0.6}), ArgumentError);
  CHECK_THROWS_AS(CategoryDistribution({1.1, -0.1}), ArgumentError);
  CHECK_THROWS_AS(CategoryDistribution::uniform(1), ArgumentError);
  CHECK_NOTHROW(CategoryDistribution({0.5, 0.5 + 5e-10}));
}

TEST_CASE("plain_ce examples") {
  const std::vector<int> y = {0, 3, 1};
  const auto uniform = plain_ce(Matrix(3, 4, 0.25), y);
  CHECK(std::abs(uniform.value - std::log(4.0)) < 1e-15);

  Matrix confident(2, 3, -40.0);
  confident(0, 1) = 40.0;
  confident(1, 2) = 40.0;
  const std::vector<int> right = {1, 2};
  CHECK(plain_ce(confident, right).value < 1e-30);

  CHECK_THROWS_AS(plain_ce(Matrix(0, 3), std::vector<int>{}), ArgumentError);
  CHECK_THROWS_AS(plain_ce(Matrix(1, 3), std::vector<int>{3}), ArgumentError);
  CHECK_THROWS_AS(plain_ce(Matrix(1, 3), std::vector<int>{-1}), ArgumentError);
  CHECK_THROWS_AS(plain_ce(Matrix(2, 3), std::vector<int>{0}), ArgumentError);
}

TEST_CASE("reweighted_ce: hand-evaluated weighted ratio") {
  // Row 0: CE of label 0 with logits (0, ln(e-1)) is ln(e) = 1.
  // Row 1: CE of label 1 with logits (ln(e^2-1), 0) is ln(e^2) = 2.
  Matrix logits(2, 2);
  logits(0, 1) = std::log(std::exp(1.0) - 1.0);
  logits(1, 0) = std::log(std::exp(2.0) - 1.0);
  const std::vector<int> y = {0, 1};
  const auto ce = per_sample_ce(logits, y);
  CHECK(std::abs(ce[0] - 1.0) < 1e-14);
  CHECK(std::abs(ce[1] - 2.0) < 1e-14);
  const auto r = reweighted_ce(logits, y, CategoryDistribution({0.7, 0.3}));
  CHECK(std::abs(r.value - 1.3) < 1e-14);
}

TEST_CASE("reweighted_ce reductions") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t c = 2 + rng.below(9), b = 1 + rng.below(8);
    const auto logits = random_logits(rng, b, c);
    const auto y = random_labels(rng, b, c);
    const auto omega = CategoryDistribution(random_simplex(rng, c, 0.05));

    const auto plain = plain_ce(logits, y);
    const auto uniform = reweighted_ce(logits, y, CategoryDistribution::uniform(c));
    CHECK(std::abs(plain.value - uniform.value) <= 1e-12);
    for (std::size_t k = 0; k < plain.logit_grad.size(); ++k) {
      CHECK(std::abs(plain.logit_grad.data()[k] - uniform.logit_grad.data()[k]) <= 1e-15);
    }

    // One shared label: the ratio cancels and omega is irrelevant.
    const std::vector<int> same(b, y[0]);
    CHECK(std::abs(reweighted_ce(logits, same, omega).value - plain_ce(logits, same).value) <= 1e-12);

    // Rescaling omega by a constant does not change anything; built by hand
    // since a rescaled omega is not itself a CategoryDistribution.
    std::vector<double> rescaled(c);
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      rescaled[k] = 3.7 * omega[k];
      s += rescaled[k];
    }
    for (double& x : rescaled) x /= s;
    CHECK(std::abs(reweighted_ce(logits, y, CategoryDistribution(rescaled)).value -
                   reweighted_ce(logits, y, omega).value) <= 1e-12);
  }
}

TEST_CASE("reweighted_ce equals direct summation for every small batch shape") {
  Rng rng(4);
  for (std::size_t c = 2; c <= 3; ++c) {
    for (std::size_t b = 1; b <= 3; ++b) {
      for (int t = 0; t < 20; ++t) {
        const auto logits = random_logits(rng, b, c);
        const auto y = random_labels(rng, b, c);
        const auto omega = random_simplex(rng, c, 0.05);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < b; ++i) rows.emplace_back(logits.row(i).begin(), logits.row(i).end());
        const double expected = oracle::direct_reweighted_ce(rows, y, omega);
        CHECK(std::abs(reweighted_ce(logits, y, CategoryDistribution(omega)).value - expected) <= 1e-12);
      }
    }
  }
}

TEST_CASE("rebalancing_loss examples") {
  const auto omega = weight_vector(ScaledDistribution({0.0, 2.0}), 5.0);
  Matrix probs(2, 2);
  probs(0, 0) = 0.8;
  probs(0, 1) = 0.2;
  probs(1, 0) = 0.2;
  probs(1, 1) = 0.8;
  // Mean prediction (0.5, 0.5); value frozen from a 30-digit evaluation.
  CHECK(std::abs(rebalancing_loss(probs, omega).value - 0.190753024885437059) < 1e-9);

  Matrix matched(1, 2);
  matched(0, 0) = omega[0];
  matched(0, 1) = omega[1];
  CHECK(std::abs(rebalancing_loss(matched, omega).value) < 1e-15);

  const auto w = CategoryDistribution::uniform(2);
  CHECK_THROWS_AS(rebalancing_loss(Matrix(0, 2), w), ArgumentError);
  CHECK_THROWS_AS(rebalancing_loss(Matrix(1, 3, 1.0 / 3.0), w), ShapeError);
}

TEST_CASE("rebalancing_loss: KL identity, nonnegativity and diversity-loss reduction") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 2 + rng.below(9), b = 1 + rng.below(8);
    Matrix probs(b, c);
    for (std::size_t i = 0; i < b; ++i) {
      const auto p = random_simplex(rng, c);
      std::copy(p.begin(), p.end(), probs.row(i).begin());
    }
    const auto p_bar = mean_prediction(probs);
    const auto omega = CategoryDistribution(random_simplex(rng, c, 0.01));

    const double value = rebalancing_loss(probs, omega).value;
    CHECK(value >= 0.0);
    CHECK(std::abs(value - oracle::kl(p_bar, omega.values())) <= 1e-12);

    const double diversity = rebalancing_loss(probs, CategoryDistribution::uniform(c)).value;
    CHECK(std::abs(diversity - (std::log(static_cast<double>(c)) - oracle::entropy(p_bar))) <= 1e-10);
  }
}

TEST_CASE("rebalancing_loss clamps a vanishing class without going negative") {
  Matrix probs(2, 3, 0.0);
  probs(0, 0) = 1.0;
  probs(1, 1) = 1.0;  // p_bar = (0.5, 0.5, 0)
  const auto r = rebalancing_loss(probs, CategoryDistribution::uniform(3));
  CHECK(std::isfinite(r.value));
  CHECK(r.value >= -10 * kLogClamp);
  CHECK(std::abs(r.value - (std::log(3.0) - std::log(2.0))) < 1e-12);
  CHECK(r.logit_grad.all_finite());
}

TEST_CASE("logit gradients of every loss match central finite differences") {
  Rng rng(6);
  for (int t = 0; t < 40; ++t) {
    const std::size_t c = 2 + rng.below(9), b = 1 + rng.below(8);
    const auto logits = random_logits(rng, b, c);
    const auto y = random_labels(rng, b, c);
    const auto omega = CategoryDistribution(random_simplex(rng, c, 0.05));

    const auto ce = plain_ce(logits, y);
    CHECK(logit_grad_error(logits, ce.logit_grad, [&](const Matrix& q) { return plain_ce(q, y).value; }) <= 1e-4);

    const auto rw = reweighted_ce(logits, y, omega);
    CHECK(logit_grad_error(logits, rw.logit_grad,
                           [&](const Matrix& q) { return reweighted_ce(q, y, omega).value; }) <= 1e-4);

    const auto rb = rebalancing_loss(softmax_rows(logits), omega);
    CHECK(logit_grad_error(logits, rb.logit_grad,
                           [&](const Matrix& q) { return rebalancing_loss(softmax_rows(q), omega).value; }) <= 1e-4);
  }
}
