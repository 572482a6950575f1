#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "pathovox/nn.hpp"
#include "pathovox/optim.hpp"
#include "pathovox/rng.hpp"

using namespace pathovox;

TEST_CASE("cross entropy values") {
  const std::vector<double> even = {0.5, 0.5};
  const std::vector<double> target = {1.0, 0.0};
  CHECK(cross_entropy(even, target) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const std::vector<double> exact = {1.0, 0.0};
  CHECK(cross_entropy(exact, target) == 0.0);

  const std::vector<double> bad_sum = {0.9, 0.4};
  CHECK_THROWS_AS(cross_entropy(bad_sum, target), ShapeMismatch);
  const std::vector<double> short_target = {1.0};
  CHECK_THROWS_AS(cross_entropy(even, short_target), ShapeMismatch);
}

TEST_CASE("cross entropy is non-negative, zero only at the target") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
    const auto p = softmax(logits);
    const std::vector<double> target = {1.0, 0.0};
    const double loss = cross_entropy(p, target);
    CHECK(loss >= 0.0);
    if (p[0] < 1.0) CHECK(loss > 0.0);
  }
}

TEST_CASE("softmax cross entropy gradient is p - y") {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> y = {1.0, 0.0};
  const auto g = softmax_cross_entropy_grad(p, y);
  CHECK(g[0] == -0.5);
  CHECK(g[1] == 0.5);
}

TEST_CASE("p - y matches finite differences through the softmax within 1e-10") {
  Rng rng(2);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> logits = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    std::vector<double> target = {0.0, 0.0, 0.0};
    target[rng.next_below(3)] = 1.0;

    const auto analytic = softmax_cross_entropy_grad(softmax(logits), target);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double original = logits[k];
      logits[k] = original + h;
      const double up = cross_entropy(softmax(logits), target);
      logits[k] = original - h;
      const double down = cross_entropy(softmax(logits), target);
      logits[k] = original;
      const double numeric = (up - down) / (2.0 * h);
      CHECK(std::abs(analytic[k] - numeric) < 1e-10);
    }
  }
}

TEST_CASE("adam step contracts") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor theta{{3}, {1.0, -2.0, 0.5}};
    Tensor grad = Tensor::zeros({3});
    AdamState state = AdamState::for_parameters({&theta}, 6e-5);
    adam_step({&theta}, {&grad}, state);
    CHECK(theta.values == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(state.step == 1);
  }
  SUBCASE("first-step magnitude with bias correction") {
    Tensor theta{{1}, {1.0}};
    Tensor grad{{1}, {0.5}};
    AdamState state = AdamState::for_parameters({&theta}, 6e-5);
    adam_step({&theta}, {&grad}, state);
    // m_hat = g and v_hat = g^2 at t = 1, so the update is
    // -lr * g / (|g| + eps)
    const double expected_delta = -6e-5 * (0.5 / (0.5 + 1e-8));
    CHECK(theta[0] == doctest::Approx(1.0 + expected_delta).epsilon(1e-15));
    CHECK(expected_delta == doctest::Approx(-5.99999988e-5).epsilon(1e-12));
  }
  SUBCASE("100 steps shrink theta^2 from theta = 1") {
    Tensor theta{{1}, {1.0}};
    AdamState state = AdamState::for_parameters({&theta}, 0.1);
    double previous = 1.0;
    for (int step = 0; step < 100; ++step) {
      Tensor grad{{1}, {2.0 * theta[0]}};
      adam_step({&theta}, {&grad}, state);
      if (step < 5) {
        CHECK(std::abs(theta[0]) < previous);
        previous = std::abs(theta[0]);
      }
    }
    CHECK(std::abs(theta[0]) < 0.5);
  }
  SUBCASE("non-finite gradient raises") {
    Tensor theta{{1}, {1.0}};
    Tensor grad{{1}, {std::nan("")}};
    AdamState state = AdamState::for_parameters({&theta}, 6e-5);
    CHECK_THROWS_AS(adam_step({&theta}, {&grad}, state), NonFiniteGradient);
  }
  SUBCASE("deterministic and shape preserving") {
    Rng rng(3);
    Tensor t1 = Tensor::zeros({4, 3});
    for (double& v : t1.values) v = rng.uniform(-1, 1);
    Tensor t2 = t1;
    Tensor grad = Tensor::zeros({4, 3});
    for (double& v : grad.values) v = rng.uniform(-1, 1);
    AdamState s1 = AdamState::for_parameters({&t1}, 1e-3);
    AdamState s2 = AdamState::for_parameters({&t2}, 1e-3);
    adam_step({&t1}, {&grad}, s1);
    adam_step({&t2}, {&grad}, s2);
    CHECK(t1.values == t2.values);
    CHECK(t1.shape == std::vector<std::size_t>{4, 3});
  }
}

TEST_CASE("plateau schedule halves after 8 stalled epochs and clamps") {
  ScheduleState state;
  double lr = 6e-5;

  SUBCASE("8 non-improving epochs halve the rate") {
    lr = plateau_update(state, 0.70, lr);  // first epoch sets the best
    CHECK(lr == 6e-5);
    for (int epoch = 0; epoch < 7; ++epoch) {
      lr = plateau_update(state, 0.70, lr);  // no strict improvement
      CHECK(lr == 6e-5);
    }
    lr = plateau_update(state, 0.70, lr);  // 8th stalled epoch
    CHECK(lr == 3e-5);
    CHECK(state.epochs_since_acc_improvement == 0);
  }
  SUBCASE("improvement resets the counter") {
    plateau_update(state, 0.70, lr);
    for (int epoch = 0; epoch < 5; ++epoch) lr = plateau_update(state, 0.70, lr);
    CHECK(state.epochs_since_acc_improvement == 5);
    lr = plateau_update(state, 0.71, lr);
    CHECK(state.epochs_since_acc_improvement == 0);
    CHECK(lr == 6e-5);
  }
  SUBCASE("repeated halvings clamp at the minimum") {
    plateau_update(state, 0.99, lr);  // lock in an unbeatable best
    for (int halving = 0; halving < 40; ++halving)
      for (int epoch = 0; epoch < 8; ++epoch) lr = plateau_update(state, 0.5, lr);
    CHECK(lr == 1e-7);
    for (int epoch = 0; epoch < 8; ++epoch) lr = plateau_update(state, 0.5, lr);
    CHECK(lr == 1e-7);
  }
  SUBCASE("the rate never leaves [min_lr, initial] and never increases") {
    Rng rng(4);
    plateau_update(state, rng.next_double(), lr);
    double previous = lr;
    for (int epoch = 0; epoch < 300; ++epoch) {
      lr = plateau_update(state, rng.next_double(), lr);
      CHECK(lr <= previous);
      CHECK(lr >= 1e-7);
      CHECK(lr <= 6e-5);
      previous = lr;
    }
  }
}

TEST_CASE("early stopping fires exactly at the patience limit") {
  SUBCASE("monotonically decreasing loss never stops") {
    ScheduleState state;
    double loss = 10.0;
    for (int epoch = 0; epoch < 100; ++epoch) {
      CHECK_FALSE(early_stop_update(state, loss));
      loss *= 0.99;
    }
  }
  SUBCASE("flat loss stops at the stop_patience-th stalled epoch") {
    ScheduleState state;
    CHECK_FALSE(early_stop_update(state, 1.0));  // improvement from infinity
    for (int stalled = 1; stalled < 20; ++stalled) {
      CHECK_FALSE(early_stop_update(state, 1.0));
      CHECK(state.epochs_since_loss_improvement == stalled);
    }
    CHECK(early_stop_update(state, 1.0));  // 20th stalled epoch
  }
  SUBCASE("improvement on the brink resets the counter") {
    ScheduleState state;
    early_stop_update(state, 1.0);
    for (int stalled = 1; stalled <= 19; ++stalled) early_stop_update(state, 1.0);
    CHECK(state.epochs_since_loss_improvement == 19);
    CHECK_FALSE(early_stop_update(state, 0.5));
    CHECK(state.epochs_since_loss_improvement == 0);
  }
}
