#include "proxyhpo/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "proxyhpo/parallel.hpp"
#include "proxyhpo/random.hpp"
#include "proxyhpo/version.hpp"

namespace proxyhpo {
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kPolicyStream = 0x5eed0f0011c7ull;

const char* kReinforceNote =
    "rl mode: factored REINFORCE policy (independent softmax per axis, EMA baseline) "
    "used in place of a recurrent controller";

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

TrialResult evaluate_guarded(const Evaluator& evaluator, const TrialSpec& spec) {
  try {
    auto result = evaluator(spec);
    result.trial_id = spec.trial_id;
    return result;
  } catch (const Error& e) {
    TrialResult r;
    r.trial_id = spec.trial_id;
    r.status = TrialStatus::kFailed;
    r.error = e.code();
    r.message = e.what();
    return r;
  } catch (const std::exception& e) {
    TrialResult r;
    r.trial_id = spec.trial_id;
    r.status = TrialStatus::kFailed;
    r.message = e.what();
    return r;
  }
}

std::optional<std::size_t> best_trial(const std::vector<TrialRecord>& trials) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& r = trials[i].result;
    if (!r.ok()) continue;
    if (!best || r.val_dice > trials[*best].result.val_dice) best = i;
  }
  return best;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

SearchSpace SearchSpace::default_grid() { return SearchSpace{}; }

SearchSpace SearchSpace::rl_default() {
  SearchSpace s;
  s.learning_rates = LogRange{};
  s.shift_probs = LinearRange{};
  return s;
}

void SearchSpace::validate() const {
  if (optimizers.empty()) throw Error(ErrorCode::kInvalidInput, "no optimizers in search space");
  if (const auto* set = std::get_if<std::vector<double>>(&learning_rates)) {
    if (set->empty()) throw Error(ErrorCode::kInvalidInput, "empty learning-rate set");
    for (double lr : *set) {
      if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidInput, "learning rates must be > 0");
    }
  } else {
    const auto& r = std::get<LogRange>(learning_rates);
    if (!(r.min > 0.0) || !(r.max >= r.min) || r.bins < 1) {
      throw Error(ErrorCode::kInvalidInput, "invalid learning-rate range");
    }
  }
  if (const auto* set = std::get_if<std::vector<double>>(&shift_probs)) {
    if (set->empty()) throw Error(ErrorCode::kInvalidInput, "empty shift-probability set");
    for (double p : *set) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidInput, "probabilities must be in [0, 1]");
    }
  } else {
    const auto& r = std::get<LinearRange>(shift_probs);
    if (!(r.min >= 0.0 && r.max <= 1.0 && r.min <= r.max) || r.bins < 1) {
      throw Error(ErrorCode::kInvalidInput, "invalid shift-probability range");
    }
  }
}

bool SearchSpace::is_grid() const {
  return std::holds_alternative<std::vector<double>>(learning_rates) &&
         std::holds_alternative<std::vector<double>>(shift_probs);
}

std::vector<double> SearchSpace::learning_rate_values() const {
  if (const auto* set = std::get_if<std::vector<double>>(&learning_rates)) return *set;
  const auto& r = std::get<LogRange>(learning_rates);
  const double lo = std::log10(r.min);
  const double width = (std::log10(r.max) - lo) / r.bins;
  std::vector<double> out;
  for (int k = 0; k < r.bins; ++k) out.push_back(std::pow(10.0, lo + (k + 0.5) * width));
  return out;
}

std::vector<double> SearchSpace::shift_prob_values() const {
  if (const auto* set = std::get_if<std::vector<double>>(&shift_probs)) return *set;
  const auto& r = std::get<LinearRange>(shift_probs);
  if (r.bins == 1) return {r.min};
  std::vector<double> out;
  for (int k = 0; k < r.bins; ++k) out.push_back(r.min + (r.max - r.min) * k / (r.bins - 1));
  return out;
}

std::pair<double, double> SearchSpace::learning_rate_span() const {
  if (const auto* set = std::get_if<std::vector<double>>(&learning_rates)) {
    const auto [lo, hi] = std::minmax_element(set->begin(), set->end());
    return {*lo, *hi};
  }
  const auto& r = std::get<LogRange>(learning_rates);
  return {r.min, r.max};
}

std::vector<HyperParams> enumerate_grid(const SearchSpace& space) {
  space.validate();
  if (!space.is_grid()) {
    throw Error(ErrorCode::kMode, "grid enumeration needs explicit value sets on every axis");
  }
  auto lrs = sorted_unique(space.learning_rate_values());
  std::reverse(lrs.begin(), lrs.end());
  const auto ps = sorted_unique(space.shift_prob_values());
  std::vector<HyperParams> out;
  for (auto opt : space.optimizers)
    for (double lr : lrs)
      for (double p : ps) out.push_back({opt, lr, p});
  return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, index);
}

TrialSpec make_trial(std::size_t index, std::uint64_t seed, const HyperParams& hp,
                     const TrialTemplate& tmpl) {
  hp.validate();
  for (const auto& id : tmpl.train_items) {
    if (std::find(tmpl.val_items.begin(), tmpl.val_items.end(), id) != tmpl.val_items.end()) {
      throw Error(ErrorCode::kSplit, "item '" + id + "' is in both train and val");
    }
  }
  if (tmpl.max_steps < 1) throw Error(ErrorCode::kInvalidInput, "max_steps must be >= 1");
  char id[16];
  std::snprintf(id, sizeof(id), "t%04zu", index);

  TrialSpec t;
  t.trial_id = id;
  t.seed = seed;
  t.hyperparams = hp;
  t.network = tmpl.network;
  t.train_items = tmpl.train_items;
  t.val_items = tmpl.val_items;
  t.manifest = tmpl.manifest;
  t.max_steps = tmpl.max_steps;
  const double capacity = static_cast<double>(param_count(tmpl.network)) /
                          static_cast<double>(param_count(tmpl.reference));
  t.cost_gpu_hours = tmpl.cost.gpu_hours(tmpl.train_items.size(), capacity, tmpl.max_steps);
  return t;
}

void BudgetLedger::add(double gpu_hours) {
  if (!(gpu_hours >= 0.0)) throw Error(ErrorCode::kInvalidInput, "negative GPU hours");
  entries.push_back(gpu_hours);
}

double BudgetLedger::total() const {
  double sum = 0.0;
  for (double e : entries) sum += e;
  return sum;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    z += out[i];
  }
  for (double& p : out) p /= z;
  return out;
}

std::optional<HyperParams> SearchReport::best_hyperparams() const {
  if (!best) return std::nullopt;
  return trials[*best].spec.hyperparams;
}

SearchReport grid_search(const SearchSpace& space, const TrialTemplate& tmpl,
                         const Evaluator& evaluator, int workers, std::uint64_t master_seed) {
  const auto grid = enumerate_grid(space);
  SearchReport report;
  report.mode = "grid";
  report.version = kVersion;
  report.master_seed = master_seed;
  report.space = space;
  report.reference = tmpl.reference;

  std::vector<TrialSpec> specs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    specs.push_back(make_trial(i, trial_seed(master_seed, i), grid[i], tmpl));
  }
  std::vector<TrialResult> results(specs.size());
  parallel_for(specs.size(), workers,
               [&](std::size_t i) { results[i] = evaluate_guarded(evaluator, specs[i]); });

  for (std::size_t i = 0; i < specs.size(); ++i) {
    report.ledger.add(results[i].gpu_hours);
    report.partial = report.partial || !results[i].ok();
    report.trials.push_back({std::move(specs[i]), std::move(results[i])});
  }
  report.best = best_trial(report.trials);
  return report;
}

SearchReport reinforce_search(const SearchSpace& space, const TrialTemplate& tmpl,
                              const Evaluator& evaluator, const ReinforceOptions& options) {
  space.validate();
  if (options.n_trials < 1) throw Error(ErrorCode::kInvalidInput, "n_trials must be >= 1");
  if (!(options.alpha >= 0.0)) throw Error(ErrorCode::kInvalidInput, "alpha must be >= 0");
  if (!(options.baseline_decay >= 0.0 && options.baseline_decay < 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "baseline decay must be in [0, 1)");
  }
  const std::vector<std::size_t> axis_sizes = {space.optimizers.size(),
                                               space.learning_rate_values().size(),
                                               space.shift_prob_values().size()};
  const auto lrs = space.learning_rate_values();
  const auto ps = space.shift_prob_values();

  PolicyState policy;
  for (auto n : axis_sizes) policy.logits.emplace_back(n, 0.0);

  SearchReport report;
  report.mode = "rl";
  report.version = kVersion;
  report.master_seed = options.master_seed;
  report.space = space;
  report.reference = tmpl.reference;
  report.note = kReinforceNote;

  Rng rng(derive_seed(options.master_seed, kPolicyStream));
  for (int trial = 0; trial < options.n_trials; ++trial) {
    std::vector<std::vector<double>> probs;
    std::vector<std::size_t> choice;
    for (const auto& logits : policy.logits) {
      probs.push_back(softmax(logits));
      choice.push_back(sample_categorical(probs.back(), rng));
    }
    const HyperParams hp{space.optimizers[choice[0]], lrs[choice[1]], ps[choice[2]]};
    const auto index = static_cast<std::size_t>(trial);
    auto spec = make_trial(index, trial_seed(options.master_seed, index), hp, tmpl);
    auto result = evaluate_guarded(evaluator, spec);

    const double reward = result.ok() ? result.val_dice : 0.0;
    const double advantage = reward - policy.baseline;
    policy.baseline = options.baseline_decay * policy.baseline +
                      (1.0 - options.baseline_decay) * reward;
    for (std::size_t axis = 0; axis < policy.logits.size(); ++axis) {
      auto& logits = policy.logits[axis];
      for (std::size_t k = 0; k < logits.size(); ++k) {
        const double indicator = k == choice[axis] ? 1.0 : 0.0;
        logits[k] += options.alpha * advantage * (indicator - probs[axis][k]);
      }
    }
    ++policy.steps;

    report.ledger.add(result.gpu_hours);
    report.partial = report.partial || !result.ok();
    report.trials.push_back({std::move(spec), std::move(result)});
  }

  for (const auto& logits : policy.logits) report.policy_mode.push_back(argmax(logits));
  report.policy_mode_hyperparams = HyperParams{space.optimizers[report.policy_mode[0]],
                                               lrs[report.policy_mode[1]], ps[report.policy_mode[2]]};
  report.policy = std::move(policy);
  report.best = best_trial(report.trials);
  return report;
}

std::string config_id(const HyperParams& hp) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s/lr=%.6g/p=%.6g", std::string(to_string(hp.optimizer)).c_str(),
                hp.learning_rate, hp.intensity_shift_prob);
  return buf;
}

json hyperparams_to_json(const HyperParams& hp) {
  return {{"optimizer", std::string(to_string(hp.optimizer))},
          {"learning_rate", hp.learning_rate},
          {"intensity_shift_prob", hp.intensity_shift_prob}};
}

HyperParams hyperparams_from_json(const json& doc) {
  HyperParams hp;
  hp.optimizer = parse_optimizer(doc.at("optimizer").get<std::string>());
  hp.learning_rate = doc.at("learning_rate").get<double>();
  hp.intensity_shift_prob = doc.at("intensity_shift_prob").get<double>();
  return hp;
}

json space_to_json(const SearchSpace& space) {
  json opts = json::array();
  for (auto o : space.optimizers) opts.push_back(std::string(to_string(o)));
  json lr, p;
  if (const auto* set = std::get_if<std::vector<double>>(&space.learning_rates)) {
    lr = {{"values", *set}};
  } else {
    const auto& r = std::get<LogRange>(space.learning_rates);
    lr = {{"log_range", {{"min", r.min}, {"max", r.max}, {"bins", r.bins}}}};
  }
  if (const auto* set = std::get_if<std::vector<double>>(&space.shift_probs)) {
    p = {{"values", *set}};
  } else {
    const auto& r = std::get<LinearRange>(space.shift_probs);
    p = {{"linear_range", {{"min", r.min}, {"max", r.max}, {"bins", r.bins}}}};
  }
  return {{"optimizers", opts}, {"learning_rates", lr}, {"intensity_shift_probs", p}};
}

SearchSpace space_from_json(const json& doc) {
  SearchSpace s;
  s.optimizers.clear();
  for (const auto& o : doc.at("optimizers")) s.optimizers.push_back(parse_optimizer(o.get<std::string>()));
  const auto& lr = doc.at("learning_rates");
  if (lr.contains("values")) {
    s.learning_rates = lr["values"].get<std::vector<double>>();
  } else {
    const auto& r = lr.at("log_range");
    s.learning_rates = LogRange{r.at("min").get<double>(), r.at("max").get<double>(), r.at("bins").get<int>()};
  }
  const auto& p = doc.at("intensity_shift_probs");
  if (p.contains("values")) {
    s.shift_probs = p["values"].get<std::vector<double>>();
  } else {
    const auto& r = p.at("linear_range");
    s.shift_probs = LinearRange{r.at("min").get<double>(), r.at("max").get<double>(), r.at("bins").get<int>()};
  }
  return s;
}

namespace {

json result_to_json(const TrialResult& r) {
  json out = {{"trial_id", r.trial_id},
              {"status", r.ok() ? "ok" : "failed"},
              {"val_dice", r.val_dice},
              {"test_dice", r.test_dice ? json(*r.test_dice) : json(nullptr)},
              {"wall_seconds", r.wall_seconds},
              {"gpu_hours", r.gpu_hours}};
  if (r.error) out["error"] = std::string(error_code_name(*r.error));
  if (!r.message.empty()) out["message"] = r.message;
  return out;
}

TrialResult result_from_json(const json& doc) {
  TrialResult r;
  r.trial_id = doc.at("trial_id").get<std::string>();
  r.status = doc.at("status").get<std::string>() == "ok" ? TrialStatus::kOk : TrialStatus::kFailed;
  r.val_dice = doc.at("val_dice").get<double>();
  if (doc.contains("test_dice") && !doc["test_dice"].is_null()) r.test_dice = doc["test_dice"].get<double>();
  r.wall_seconds = doc.at("wall_seconds").get<double>();
  r.gpu_hours = doc.at("gpu_hours").get<double>();
  if (doc.contains("error")) r.error = parse_error_code(doc["error"].get<std::string>());
  r.message = doc.value("message", std::string{});
  return r;
}

}  // namespace

json report_to_json(const SearchReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) {
    json spec = json::parse(encode_request(t.spec));
    spec["cost_gpu_hours"] = t.spec.cost_gpu_hours;
    spec["config_id"] = config_id(t.spec.hyperparams);
    trials.push_back({{"spec", std::move(spec)}, {"result", result_to_json(t.result)}});
  }
  json best = nullptr;
  if (report.best) {
    const auto& t = report.trials[*report.best];
    best = {{"index", *report.best},
            {"trial_id", t.spec.trial_id},
            {"hyperparams", hyperparams_to_json(t.spec.hyperparams)},
            {"val_dice", t.result.val_dice}};
  }
  json policy = nullptr;
  if (report.policy) {
    policy = {{"logits", report.policy->logits},
              {"baseline", report.policy->baseline},
              {"steps", report.policy->steps},
              {"mode_bins", report.policy_mode}};
    if (report.policy_mode_hyperparams) {
      policy["mode_hyperparams"] = hyperparams_to_json(*report.policy_mode_hyperparams);
    }
  }
  json doc = {{"mode", report.mode},
              {"version", report.version},
              {"master_seed", report.master_seed},
              {"space", space_to_json(report.space)},
              {"reference_network", report.reference},
              {"trials", std::move(trials)},
              {"best", std::move(best)},
              {"ledger", {{"entries", report.ledger.entries}, {"total", report.ledger.total()}}},
              {"partial", report.partial},
              {"policy", std::move(policy)}};
  if (!report.note.empty()) doc["note"] = report.note;
  return doc;
}

SearchReport report_from_json(const json& doc) {
  SearchReport r;
  try {
    r.mode = doc.at("mode").get<std::string>();
    r.version = doc.value("version", std::string{});
    r.master_seed = doc.value("master_seed", std::uint64_t{0});
    r.space = space_from_json(doc.at("space"));
    r.reference = doc.at("reference_network").get<UNetSpec>();
    for (const auto& t : doc.at("trials")) {
      TrialRecord rec;
      rec.spec = decode_request(t.at("spec").dump());
      rec.spec.cost_gpu_hours = t.at("spec").value("cost_gpu_hours", 0.0);
      rec.result = result_from_json(t.at("result"));
      r.trials.push_back(std::move(rec));
    }
    if (!doc.at("best").is_null()) r.best = doc["best"].at("index").get<std::size_t>();
    r.ledger.entries = doc.at("ledger").at("entries").get<std::vector<double>>();
    r.partial = doc.at("partial").get<bool>();
    if (doc.contains("policy") && !doc["policy"].is_null()) {
      const auto& p = doc["policy"];
      PolicyState state;
      state.logits = p.at("logits").get<std::vector<std::vector<double>>>();
      state.baseline = p.at("baseline").get<double>();
      state.steps = p.at("steps").get<std::int64_t>();
      r.policy_mode = p.at("mode_bins").get<std::vector<std::size_t>>();
      if (p.contains("mode_hyperparams")) r.policy_mode_hyperparams = hyperparams_from_json(p["mode_hyperparams"]);
      r.policy = std::move(state);
    }
    r.note = doc.value("note", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed search report: ") + e.what());
  }
  return r;
}

}  // namespace proxyhpo
