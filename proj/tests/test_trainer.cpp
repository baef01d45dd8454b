#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "proxyhpo/error.hpp"
#include "proxyhpo/hpo.hpp"
#include "proxyhpo/trainer.hpp"

using namespace proxyhpo;

namespace {

TrialSpec trial_for(Optimizer opt, double lr, double p, int n_train, UNetSpec net = full_spec(),
                    std::uint64_t seed = 1) {
  TrialTemplate tmpl;
  tmpl.network = net;
  for (int i = 0; i < n_train; ++i) tmpl.train_items.push_back("tr" + std::to_string(i));
  tmpl.val_items = {"va0"};
  return make_trial(0, seed, {opt, lr, p}, tmpl);
}

LabelMask mask(std::vector<float> v) {
  const Shape3 shape{static_cast<int>(v.size()), 1, 1};
  return LabelMask(Volume3D(shape, {}, std::move(v)));
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("surrogate closed-form examples") {
    const auto a = surrogate_evaluate(trial_for(Optimizer::kAdam, 4e-4, 0.4, 32), 0.0);
    CHECK(a.ok());
    CHECK(a.val_dice == doctest::Approx(0.95 * 32.0 / 35.0 / 1.05).epsilon(1e-12));
    CHECK(a.val_dice == doctest::Approx(0.8271).epsilon(1e-4));
    const auto b = surrogate_evaluate(trial_for(Optimizer::kAdam, 4e-3, 0.4, 32), 0.0);
    CHECK(b.val_dice == doctest::Approx(a.val_dice * std::exp(-2.0)).epsilon(1e-12));
    CHECK(b.val_dice == doctest::Approx(0.1119).epsilon(1e-3));
  }

  TEST_CASE("surrogate matches the term-by-term oracle") {
    const double full = static_cast<double>(param_count(full_spec()));
    for (auto opt : all_optimizers())
      for (double lr : {1e-5, 1e-4, 3e-4, 1e-3, 1e-2})
        for (double p : {0.0, 0.4, 1.0})
          for (int n : {1, 8, 32})
            for (const auto& net : proxy_schedule(full_spec())) {
              const double c = param_count(net) / full;
              CHECK(surrogate_evaluate(trial_for(opt, lr, p, n, net), 0.0).val_dice ==
                    doctest::Approx(oracle::surrogate_dice(opt, lr, p, n, c)).epsilon(1e-12));
            }
  }

  TEST_CASE("surrogate peaks at each optimizer's optimum") {
    for (auto opt : all_optimizers()) {
      const auto mu = surrogate_optimum(opt).learning_rate;
      double best_lr = 0, best = -1;
      for (int k = 0; k <= 3000; ++k) {
        const double lr = std::pow(10.0, -6.0 + 5.0 * k / 3000.0);
        const double d = surrogate_evaluate(trial_for(opt, lr, 0.4, 32), 0.0).val_dice;
        if (d > best) {
          best = d;
          best_lr = lr;
        }
      }
      CHECK(std::abs(std::log10(best_lr) - std::log10(mu)) <= 5.0 / 3000.0);
    }
  }

  TEST_CASE("surrogate is monotone in data size and capacity") {
    for (auto opt : all_optimizers()) {
      double last = -1;
      for (int n = 1; n <= 64; n *= 2) {
        const double d = surrogate_evaluate(trial_for(opt, 3e-4, 0.5, n), 0.0).val_dice;
        CHECK(d >= last);
        last = d;
      }
      last = -1;
      for (int levels = 1; levels <= 5; ++levels) {
        const double d =
            surrogate_evaluate(trial_for(opt, 3e-4, 0.5, 8, {levels, 4, 1, 1, 2}), 0.0).val_dice;
        CHECK(d >= last);
        last = d;
      }
    }
  }

  TEST_CASE("surrogate noise is seeded and clamped") {
    const auto t = trial_for(Optimizer::kAdam, 4e-4, 0.4, 32, full_spec(), 77);
    const auto x = surrogate_evaluate(t, 0.05);
    CHECK(x.val_dice == surrogate_evaluate(t, 0.05).val_dice);
    CHECK(x.val_dice != surrogate_evaluate(t, 0.0).val_dice);
    const auto loud = surrogate_evaluate(t, 100.0);
    CHECK(loud.val_dice >= 0.0);
    CHECK(loud.val_dice <= 1.0);
  }

  TEST_CASE("surrogate gpu_hours come from the cost model") {
    TrialTemplate tmpl;
    tmpl.network = {3, 4, 1, 1, 2};
    tmpl.train_items = {"a", "b", "c", "d"};
    tmpl.val_items = {"e"};
    tmpl.max_steps = 100;
    tmpl.cost.scale = 0.5;
    const auto t = make_trial(3, 1, {}, tmpl);
    const double c = static_cast<double>(param_count(tmpl.network)) / param_count(full_spec());
    CHECK(t.cost_gpu_hours == doctest::Approx(0.5 * 4 * c * 100).epsilon(1e-12));
    CHECK(surrogate_evaluate(t, 0.0).gpu_hours == t.cost_gpu_hours);
  }

  TEST_CASE("dice examples and properties") {
    CHECK(dice_score(mask({1, 1, 0, 0}), mask({1, 1, 0, 0})) == 1.0);
    CHECK(dice_score(mask({1, 1, 0, 0}), mask({0, 0, 1, 1})) == 0.0);
    CHECK(dice_score(mask({1, 1, 1, 1, 0, 0}), mask({0, 0, 1, 1, 1, 1})) == 0.5);
    CHECK(dice_score(mask({0, 0}), mask({0, 0})) == 1.0);
    CHECK(dice_score(mask({2, 0, 3}), mask({1, 0, 1})) == 1.0);
    CHECK_THROWS_AS(dice_score(mask({1}), mask({1, 1})), Error);
  }

  TEST_CASE("hyper-parameter validation") {
    CHECK_THROWS_AS((HyperParams{Optimizer::kAdam, 0.0, 0.5}.validate()), Error);
    CHECK_THROWS_AS((HyperParams{Optimizer::kAdam, 1e-3, 1.5}.validate()), Error);
    CHECK(parse_optimizer("novograd") == Optimizer::kNovograd);
    CHECK_THROWS_AS(parse_optimizer("sgd"), Error);
  }
}
