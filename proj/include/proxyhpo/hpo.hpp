#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxyhpo/proxy_net.hpp"
#include "proxyhpo/trainer.hpp"

namespace proxyhpo {

/// Learning-rate bins spaced evenly in log10; a bin samples its log-center.
struct LogRange {
  double min = 1e-5;
  double max = 1e-2;
  int bins = 16;
  friend bool operator==(const LogRange&, const LogRange&) = default;
};

/// `bins` evenly spaced points from min to max inclusive.
struct LinearRange {
  double min = 0.0;
  double max = 1.0;
  int bins = 11;
  friend bool operator==(const LinearRange&, const LinearRange&) = default;
};

using LearningRateAxis = std::variant<std::vector<double>, LogRange>;
using ShiftProbAxis = std::variant<std::vector<double>, LinearRange>;

struct SearchSpace {
  std::vector<Optimizer> optimizers = all_optimizers();
  LearningRateAxis learning_rates = std::vector<double>{0.001, 0.0006, 0.0004, 0.0001};
  ShiftProbAxis shift_probs = std::vector<double>{0.5};

  /// Four optimizers x {1e-3, 6e-4, 4e-4, 1e-4}, shift probability fixed at 0.5.
  static SearchSpace default_grid();
  /// Four optimizers, log lr range [1e-5, 1e-2] in 16 bins, p in {0, 0.1, ..., 1}.
  static SearchSpace rl_default();

  void validate() const;
  bool is_grid() const;
  /// Sampled values per axis, in axis order (set order, or bin order).
  std::vector<double> learning_rate_values() const;
  std::vector<double> shift_prob_values() const;
  /// [min, max] of the learning-rate axis.
  std::pair<double, double> learning_rate_span() const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

/// Cartesian product ordered optimizer-major, then lr descending, then p ascending.
std::vector<HyperParams> enumerate_grid(const SearchSpace& space);

/// Everything a trial needs besides its hyper-parameters.
struct TrialTemplate {
  UNetSpec network = full_spec();
  UNetSpec reference = full_spec();
  std::vector<std::string> train_items;
  std::vector<std::string> val_items;
  std::string manifest;
  int max_steps = 200;
  CostModel cost;
};

/// Assembles trial `index` (id "t%04d"); rejects overlapping train/val ids.
TrialSpec make_trial(std::size_t index, std::uint64_t seed, const HyperParams& hp,
                     const TrialTemplate& tmpl);

/// Per-trial seed; depends only on (master_seed, index).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t index);

struct BudgetLedger {
  std::vector<double> entries;

  void add(double gpu_hours);
  double total() const;
};

struct PolicyState {
  std::vector<std::vector<double>> logits;  // optimizer, learning rate, shift probability
  double baseline = 0.0;
  std::int64_t steps = 0;
};

std::vector<double> softmax(const std::vector<double>& logits);

struct TrialRecord {
  TrialSpec spec;
  TrialResult result;
};

struct SearchReport {
  std::string mode;  // "grid" or "rl"
  std::string version;
  std::uint64_t master_seed = 0;
  SearchSpace space;
  UNetSpec reference;
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> best;
  BudgetLedger ledger;
  bool partial = false;
  std::optional<PolicyState> policy;
  std::vector<std::size_t> policy_mode;
  std::optional<HyperParams> policy_mode_hyperparams;
  std::string note;

  std::optional<HyperParams> best_hyperparams() const;
};

SearchReport grid_search(const SearchSpace& space, const TrialTemplate& tmpl,
                         const Evaluator& evaluator, int workers, std::uint64_t master_seed);

struct ReinforceOptions {
  int n_trials = 64;
  double alpha = 1.0;
  double baseline_decay = 0.9;
  std::uint64_t master_seed = 0;
};

/// Factored REINFORCE: an independent softmax policy per axis, trained with
/// reward = val_dice (0 for failed trials) against an EMA baseline. Trials
/// run strictly one after another.
SearchReport reinforce_search(const SearchSpace& space, const TrialTemplate& tmpl,
                              const Evaluator& evaluator, const ReinforceOptions& options);

nlohmann::json report_to_json(const SearchReport& report);
SearchReport report_from_json(const nlohmann::json& doc);

nlohmann::json space_to_json(const SearchSpace& space);
SearchSpace space_from_json(const nlohmann::json& doc);

nlohmann::json hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& doc);

/// Stable identifier for a hyper-parameter point, e.g. "adam/lr=0.0004/p=0.5".
std::string config_id(const HyperParams& hp);

}  // namespace proxyhpo
