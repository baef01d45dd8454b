#include "proxyhpo/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "proxyhpo/random.hpp"

namespace proxyhpo {

std::string_view to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::kAdam: return "adam";
    case Optimizer::kRmsprop: return "rmsprop";
    case Optimizer::kAdamax: return "adamax";
    case Optimizer::kNovograd: return "novograd";
  }
  return "adam";
}

Optimizer parse_optimizer(std::string_view name) {
  for (auto opt : all_optimizers()) {
    if (to_string(opt) == name) return opt;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown optimizer '" + std::string(name) + "'");
}

const std::vector<Optimizer>& all_optimizers() {
  static const std::vector<Optimizer> kAll = {Optimizer::kAdam, Optimizer::kRmsprop,
                                              Optimizer::kAdamax, Optimizer::kNovograd};
  return kAll;
}

void HyperParams::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidInput, "learning rate must be positive");
  }
  if (!(intensity_shift_prob >= 0.0 && intensity_shift_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "intensity shift probability must be in [0, 1]");
  }
}

double dice_score(const LabelMask& pred, const LabelMask& gt) {
  if (pred.shape() != gt.shape()) throw Error(ErrorCode::kGeometry, "Dice needs equal shapes");
  auto p = pred.voxels();
  auto g = gt.voxels();
  std::size_t size_p = 0, size_g = 0, overlap = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool in_p = p[i] != 0.0f;
    const bool in_g = g[i] != 0.0f;
    size_p += in_p;
    size_g += in_g;
    overlap += in_p && in_g;
  }
  if (size_p + size_g == 0) return 1.0;
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(size_p + size_g);
}

SurrogateOptimum surrogate_optimum(Optimizer opt) {
  switch (opt) {
    case Optimizer::kAdam: return {0.95, 4e-4};
    case Optimizer::kAdamax: return {0.94, 6e-4};
    case Optimizer::kRmsprop: return {0.92, 1e-4};
    case Optimizer::kNovograd: return {0.90, 1e-3};
  }
  return {0.95, 4e-4};
}

TrialResult surrogate_evaluate(const TrialSpec& trial, double noise_sigma,
                               const UNetSpec& reference) {
  trial.hyperparams.validate();
  const auto& hp = trial.hyperparams;
  const auto optimum = surrogate_optimum(hp.optimizer);

  const double width = std::log(10.0) / 2.0;
  const double log_gap = std::log(hp.learning_rate) - std::log(optimum.learning_rate);
  const double lr_bump = std::exp(-(log_gap * log_gap) / (2.0 * width * width));
  const double n = static_cast<double>(trial.train_items.size());
  const double data = n / (n + 3.0);
  const double capacity = static_cast<double>(param_count(trial.network)) /
                          static_cast<double>(param_count(reference));
  const double model = capacity / (capacity + 0.05);
  const double shift = hp.intensity_shift_prob - 0.4;
  const double augment = 1.0 - 0.15 * shift * shift;

  double noise = 0.0;
  if (noise_sigma > 0.0) {
    Rng rng(trial.seed);
    noise = noise_sigma * rng.normal();
  }

  TrialResult result;
  result.trial_id = trial.trial_id;
  result.val_dice = std::clamp(optimum.peak * lr_bump * data * model * augment + noise, 0.0, 1.0);
  result.gpu_hours = trial.cost_gpu_hours;
  result.status = TrialStatus::kOk;
  return result;
}

Evaluator surrogate_evaluator(double noise_sigma, UNetSpec reference) {
  return [noise_sigma, reference](const TrialSpec& trial) {
    return surrogate_evaluate(trial, noise_sigma, reference);
  };
}

}  // namespace proxyhpo
