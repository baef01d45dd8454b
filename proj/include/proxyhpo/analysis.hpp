#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxyhpo/hpo.hpp"

namespace proxyhpo {

/// Sample Pearson correlation. Throws an undefined-correlation error when
/// either input is constant.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

/// Euclidean distance in the (normalized log10 lr, p) plane; the optimizer is ignored.
double relative_hp_distance(const HyperParams& a, const HyperParams& b, const SearchSpace& space);

double speedup(const BudgetLedger& reference, const BudgetLedger& candidate);
double speedup(double reference_hours, double candidate_hours);

/// "high" for |r| >= 0.5, "moderate" for |r| >= 0.3, otherwise "low". Label only.
std::string correlation_band(double r);

struct PairedRun {
  std::string config_id;
  HyperParams hyperparams;
  double proxy_dice = 0.0;
  double full_dice = 0.0;
};

struct CorrelationReport {
  std::vector<PairedRun> pairs;
  double r = 0.0;
  std::size_t dropped = 0;
};

/// Aligns two reports over the same enumeration and correlates their Dice
/// columns. Pairs where either trial failed are dropped.
CorrelationReport correlation_report(const SearchReport& proxy, const SearchReport& full);

std::string paired_runs_csv(const CorrelationReport& report);

struct FidelitySummary {
  double r = 0.0;
  std::size_t n_pairs = 0;
  std::optional<double> distance;
  std::optional<double> speedup;
};

/// Correlation, best-HP distance and GPU-hour speedup of `proxy` against `full`.
FidelitySummary summarize(const SearchReport& proxy, const SearchReport& full);
nlohmann::json summary_to_json(const FidelitySummary& summary);

}  // namespace proxyhpo
