#include "proxyhpo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace proxyhpo {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidInput, "pearson needs equal lengths");
  if (xs.size() < 2) throw Error(ErrorCode::kUndefinedCorrelation, "pearson needs >= 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation, "correlation of a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double relative_hp_distance(const HyperParams& a, const HyperParams& b, const SearchSpace& space) {
  const auto [lo, hi] = space.learning_rate_span();
  for (double lr : {a.learning_rate, b.learning_rate}) {
    if (!(lr >= lo && lr <= hi)) {
      throw Error(ErrorCode::kRange, "learning rate " + std::to_string(lr) + " outside search range");
    }
  }
  double lr_term = 0.0;
  const double span = std::log10(hi) - std::log10(lo);
  if (span > 0.0) lr_term = (std::log10(a.learning_rate) - std::log10(b.learning_rate)) / span;
  const double p_term = a.intensity_shift_prob - b.intensity_shift_prob;
  return std::sqrt(lr_term * lr_term + p_term * p_term);
}

double speedup(double reference_hours, double candidate_hours) {
  if (!(candidate_hours > 0.0)) throw Error(ErrorCode::kDivision, "candidate ledger total is zero");
  return reference_hours / candidate_hours;
}

double speedup(const BudgetLedger& reference, const BudgetLedger& candidate) {
  return speedup(reference.total(), candidate.total());
}

std::string correlation_band(double r) {
  const double m = std::abs(r);
  if (m >= 0.5) return "high";
  if (m >= 0.3) return "moderate";
  return "low";
}

CorrelationReport correlation_report(const SearchReport& proxy, const SearchReport& full) {
  if (proxy.trials.size() != full.trials.size()) {
    throw Error(ErrorCode::kAlignment, "reports cover different numbers of configurations");
  }
  CorrelationReport out;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < proxy.trials.size(); ++i) {
    const auto& p = proxy.trials[i];
    const auto& f = full.trials[i];
    const auto id = config_id(p.spec.hyperparams);
    if (id != config_id(f.spec.hyperparams)) {
      throw Error(ErrorCode::kAlignment, "configuration " + std::to_string(i) + " differs: " + id +
                                             " vs " + config_id(f.spec.hyperparams));
    }
    if (!p.result.ok() || !f.result.ok()) {
      ++out.dropped;
      continue;
    }
    out.pairs.push_back({id, p.spec.hyperparams, p.result.val_dice, f.result.val_dice});
    xs.push_back(p.result.val_dice);
    ys.push_back(f.result.val_dice);
  }
  out.r = pearson(xs, ys);
  return out;
}

std::string paired_runs_csv(const CorrelationReport& report) {
  std::ostringstream out;
  out << "id,optimizer,lr,p,proxy_dice,full_dice\n";
  char buf[256];
  for (const auto& pr : report.pairs) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g\n", pr.config_id.c_str(),
                  std::string(to_string(pr.hyperparams.optimizer)).c_str(),
                  pr.hyperparams.learning_rate, pr.hyperparams.intensity_shift_prob, pr.proxy_dice,
                  pr.full_dice);
    out << buf;
  }
  return out.str();
}

FidelitySummary summarize(const SearchReport& proxy, const SearchReport& full) {
  FidelitySummary s;
  const auto corr = correlation_report(proxy, full);
  s.r = corr.r;
  s.n_pairs = corr.pairs.size();
  const auto a = proxy.best_hyperparams();
  const auto b = full.best_hyperparams();
  if (a && b) s.distance = relative_hp_distance(*a, *b, full.space);
  if (proxy.ledger.total() > 0.0) s.speedup = speedup(full.ledger, proxy.ledger);
  return s;
}

nlohmann::json summary_to_json(const FidelitySummary& summary) {
  using nlohmann::json;
  return {{"r", summary.r},
          {"n_pairs", summary.n_pairs},
          {"correlation_band", correlation_band(summary.r)},
          {"distance", summary.distance ? json(*summary.distance) : json(nullptr)},
          {"distance_definition",
           "sqrt(((log10 lr_a - log10 lr_b) / (log10 lr_max - log10 lr_min))^2 + (p_a - p_b)^2)"},
          {"speedup", summary.speedup ? json(*summary.speedup) : json(nullptr)}};
}

}  // namespace proxyhpo
