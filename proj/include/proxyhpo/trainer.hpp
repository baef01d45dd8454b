#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxyhpo/error.hpp"
#include "proxyhpo/proxy_net.hpp"
#include "proxyhpo/volume.hpp"

namespace proxyhpo {

enum class Optimizer { kAdam, kRmsprop, kAdamax, kNovograd };

std::string_view to_string(Optimizer opt);
Optimizer parse_optimizer(std::string_view name);
/// adam, rmsprop, adamax, novograd.
const std::vector<Optimizer>& all_optimizers();

struct HyperParams {
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 1e-3;
  double intensity_shift_prob = 0.0;

  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct TrialSpec {
  std::string trial_id;
  std::uint64_t seed = 0;
  HyperParams hyperparams;
  UNetSpec network;
  std::vector<std::string> train_items;
  std::vector<std::string> val_items;
  std::string manifest;
  int max_steps = 1;
  /// Declared GPU-hour cost of this trial.
  double cost_gpu_hours = 0.0;

  friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

enum class TrialStatus { kOk, kFailed };

struct TrialResult {
  std::string trial_id;
  double val_dice = 0.0;
  std::optional<double> test_dice;
  double wall_seconds = 0.0;
  double gpu_hours = 0.0;
  TrialStatus status = TrialStatus::kOk;
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const { return status == TrialStatus::kOk; }
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

using Evaluator = std::function<TrialResult(const TrialSpec&)>;

/// 2|A and B| / (|A| + |B|) over nonzero voxels; 1 when both are empty.
double dice_score(const LabelMask& pred, const LabelMask& gt);

// Surrogate trainer: a closed-form, deterministic stand-in for training.
//   dice = clamp(A_opt * exp(-(ln lr - ln mu_opt)^2 / (2 s^2)) * n/(n+3)
//                * c/(c+0.05) * (1 - 0.15 (p - 0.4)^2) + noise, 0, 1)
// with s = ln(10)/2, n = |train|, c = param_count(net) / param_count(reference).
struct SurrogateOptimum {
  double peak;
  double learning_rate;
};
SurrogateOptimum surrogate_optimum(Optimizer opt);

TrialResult surrogate_evaluate(const TrialSpec& trial, double noise_sigma,
                               const UNetSpec& reference = full_spec());

Evaluator surrogate_evaluator(double noise_sigma, UNetSpec reference = full_spec());

/// gpu_hours = scale * n_train * capacity_ratio * max_steps.
struct CostModel {
  double scale = 1e-4;
  double gpu_hours(std::size_t n_train, double capacity_ratio, int max_steps) const {
    return scale * static_cast<double>(n_train) * capacity_ratio * max_steps;
  }
};

// ---- Wire protocol -------------------------------------------------------
// One request line to the trainer, then zero or more progress lines and
// exactly one result or error line back, each a JSON object.

std::string encode_request(const TrialSpec& trial);
TrialSpec decode_request(std::string_view line);

struct ProgressMessage {
  std::string trial_id;
  std::int64_t step = 0;
  double val_dice = 0.0;
  friend bool operator==(const ProgressMessage&, const ProgressMessage&) = default;
};
struct ResultMessage {
  std::string trial_id;
  double val_dice = 0.0;
  std::optional<double> test_dice;
  double wall_seconds = 0.0;
};
struct ErrorMessage {
  std::string trial_id;
  std::string message;
};
struct UnknownMessage {
  std::string type;
};
using ResponseMessage = std::variant<ProgressMessage, ResultMessage, ErrorMessage, UnknownMessage>;

/// Throws a protocol error for anything outside the documented grammar.
/// Unrecognised "type" values come back as UnknownMessage.
ResponseMessage decode_response(std::string_view line);

std::string encode_progress(const ProgressMessage& msg);
std::string encode_result(const ResultMessage& msg);
std::string encode_error(const ErrorMessage& msg);

/// Accumulates the response stream of one trial.
class ResponseReader {
 public:
  explicit ResponseReader(std::string trial_id) : trial_id_(std::move(trial_id)) {}

  /// Blank lines and unknown message types are skipped. Any line after the
  /// terminal result/error, or a message for another trial, is a protocol error.
  void feed(std::string_view line);

  bool finished() const { return terminal_.has_value(); }
  const std::vector<ProgressMessage>& progress() const { return progress_; }
  /// The terminal message as a TrialResult; protocol error if none arrived.
  TrialResult result() const;

 private:
  std::string trial_id_;
  std::vector<ProgressMessage> progress_;
  std::optional<TrialResult> terminal_;
};

struct Transcript {
  TrialSpec request;
  std::vector<ProgressMessage> progress;
  TrialResult result;
};

/// Parses a captured exchange: the request line followed by the responses.
Transcript replay_transcript(std::string_view text);

/// Spawns `command`, sends the request on its stdin and reads responses from
/// its stdout. Failures (timeout, error line, malformed output, crash) are
/// returned as failed results carrying the error code; gpu_hours is the
/// reported wall time in hours.
TrialResult run_external_trial(const std::vector<std::string>& command, const TrialSpec& trial,
                               std::chrono::milliseconds timeout);

Evaluator external_evaluator(std::vector<std::string> command, std::chrono::milliseconds timeout);

}  // namespace proxyhpo
