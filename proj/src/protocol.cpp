#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
#include <fcntl.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <sstream>

#include "proxyhpo/trainer.hpp"

extern char** environ;

namespace proxyhpo {
using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorCode::kProtocol, what);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) protocol_error(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) protocol_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_number()) protocol_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double require_dice(const json& obj, const char* key) {
  const double d = require_number(obj, key);
  if (!(d >= 0.0 && d <= 1.0)) protocol_error(std::string("field '") + key + "' outside [0, 1]");
  return d;
}

std::vector<std::string> string_list(const json& v, const char* key) {
  if (!v.is_array()) protocol_error(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) protocol_error(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

json parse_object(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error&) {
    protocol_error("line is not JSON: " + std::string(line.substr(0, 200)));
  }
  if (!doc.is_object()) protocol_error("line is not a JSON object");
  return doc;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string encode_request(const TrialSpec& trial) {
  ordered_json network = {{"levels", trial.network.levels},
                          {"base_channels", trial.network.base_channels},
                          {"res_blocks", trial.network.res_blocks},
                          {"in_channels", trial.network.in_channels},
                          {"out_channels", trial.network.out_channels}};
  ordered_json doc = {
      {"type", "trial"},
      {"trial_id", trial.trial_id},
      {"seed", trial.seed},
      {"hyperparams",
       {{"optimizer", std::string(to_string(trial.hyperparams.optimizer))},
        {"learning_rate", trial.hyperparams.learning_rate},
        {"intensity_shift_prob", trial.hyperparams.intensity_shift_prob}}},
      {"network", std::move(network)},
      {"data", {{"train", trial.train_items}, {"val", trial.val_items}, {"manifest", trial.manifest}}},
      {"max_steps", trial.max_steps}};
  return doc.dump();
}

TrialSpec decode_request(std::string_view line) {
  const json doc = parse_object(line);
  if (require_string(doc, "type") != "trial") protocol_error("request type must be 'trial'");
  TrialSpec t;
  t.trial_id = require_string(doc, "trial_id");
  const auto& seed = require(doc, "seed");
  if (!seed.is_number_integer()) protocol_error("field 'seed' must be an integer");
  t.seed = seed.get<std::uint64_t>();
  const auto& hp = require(doc, "hyperparams");
  if (!hp.is_object()) protocol_error("field 'hyperparams' must be an object");
  try {
    t.hyperparams.optimizer = parse_optimizer(require_string(hp, "optimizer"));
  } catch (const Error& e) {
    protocol_error(e.what());
  }
  t.hyperparams.learning_rate = require_number(hp, "learning_rate");
  t.hyperparams.intensity_shift_prob = require_number(hp, "intensity_shift_prob");
  try {
    t.network = require(doc, "network").get<UNetSpec>();
  } catch (const json::exception& e) {
    protocol_error(std::string("bad network object: ") + e.what());
  }
  const auto& data = require(doc, "data");
  if (!data.is_object()) protocol_error("field 'data' must be an object");
  t.train_items = string_list(require(data, "train"), "train");
  t.val_items = string_list(require(data, "val"), "val");
  if (data.contains("manifest") && data["manifest"].is_string()) {
    t.manifest = data["manifest"].get<std::string>();
  }
  const auto& steps = require(doc, "max_steps");
  if (!steps.is_number_integer()) protocol_error("field 'max_steps' must be an integer");
  t.max_steps = steps.get<int>();
  return t;
}

ResponseMessage decode_response(std::string_view line) {
  const json doc = parse_object(line);
  const std::string type = require_string(doc, "type");
  if (type == "progress") {
    ProgressMessage m;
    m.trial_id = require_string(doc, "trial_id");
    const auto& step = require(doc, "step");
    if (!step.is_number_integer()) protocol_error("field 'step' must be an integer");
    m.step = step.get<std::int64_t>();
    m.val_dice = require_dice(doc, "val_dice");
    return m;
  }
  if (type == "result") {
    ResultMessage m;
    m.trial_id = require_string(doc, "trial_id");
    m.val_dice = require_dice(doc, "val_dice");
    if (auto it = doc.find("test_dice"); it != doc.end() && !it->is_null()) {
      m.test_dice = require_dice(doc, "test_dice");
    }
    m.wall_seconds = require_number(doc, "wall_seconds");
    if (!(m.wall_seconds >= 0.0)) protocol_error("field 'wall_seconds' must be >= 0");
    return m;
  }
  if (type == "error") {
    ErrorMessage m;
    m.trial_id = require_string(doc, "trial_id");
    m.message = require_string(doc, "message");
    return m;
  }
  return UnknownMessage{type};
}

std::string encode_progress(const ProgressMessage& msg) {
  ordered_json doc = {{"type", "progress"},
                      {"trial_id", msg.trial_id},
                      {"step", msg.step},
                      {"val_dice", msg.val_dice}};
  return doc.dump();
}

std::string encode_result(const ResultMessage& msg) {
  ordered_json doc = {{"type", "result"}, {"trial_id", msg.trial_id}, {"val_dice", msg.val_dice}};
  doc["test_dice"] = msg.test_dice ? ordered_json(*msg.test_dice) : ordered_json(nullptr);
  doc["wall_seconds"] = msg.wall_seconds;
  return doc.dump();
}

std::string encode_error(const ErrorMessage& msg) {
  ordered_json doc = {{"type", "error"}, {"trial_id", msg.trial_id}, {"message", msg.message}};
  return doc.dump();
}

void ResponseReader::feed(std::string_view line) {
  if (blank(line)) return;
  if (terminal_) protocol_error("output after the terminal message");
  const auto msg = decode_response(line);
  if (std::holds_alternative<UnknownMessage>(msg)) return;

  auto check_id = [&](const std::string& id) {
    if (id != trial_id_) protocol_error("message for trial '" + id + "', expected '" + trial_id_ + "'");
  };
  if (const auto* p = std::get_if<ProgressMessage>(&msg)) {
    check_id(p->trial_id);
    progress_.push_back(*p);
  } else if (const auto* r = std::get_if<ResultMessage>(&msg)) {
    check_id(r->trial_id);
    TrialResult out;
    out.trial_id = r->trial_id;
    out.val_dice = r->val_dice;
    out.test_dice = r->test_dice;
    out.wall_seconds = r->wall_seconds;
    out.gpu_hours = r->wall_seconds / 3600.0;
    out.status = TrialStatus::kOk;
    terminal_ = out;
  } else if (const auto* e = std::get_if<ErrorMessage>(&msg)) {
    check_id(e->trial_id);
    TrialResult out;
    out.trial_id = e->trial_id;
    out.status = TrialStatus::kFailed;
    out.error = ErrorCode::kTrainerReported;
    out.message = e->message;
    terminal_ = out;
  }
}

TrialResult ResponseReader::result() const {
  if (!terminal_) protocol_error("trainer output ended without a result or error message");
  return *terminal_;
}

Transcript replay_transcript(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<TrialSpec> request;
  std::optional<ResponseReader> reader;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    if (!request) {
      request = decode_request(line);
      reader.emplace(request->trial_id);
      continue;
    }
    reader->feed(line);
  }
  if (!request) protocol_error("transcript has no request line");
  return {*request, reader->progress(), reader->result()};
}

namespace {

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

TrialResult failed(const std::string& trial_id, ErrorCode code, std::string message) {
  TrialResult r;
  r.trial_id = trial_id;
  r.status = TrialStatus::kFailed;
  r.error = code;
  r.message = std::move(message);
  return r;
}

// Writes everything, with SIGPIPE blocked for this thread so a trainer that
// exits early surfaces as EPIPE instead of killing the process.
bool write_all(int fd, const std::string& data) {
  sigset_t block, old;
  sigemptyset(&block);
  sigaddset(&block, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &block, &old);
  std::size_t off = 0;
  bool ok = true;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ok = false;
      break;
    }
    off += static_cast<std::size_t>(n);
  }
  if (!ok) {
    const timespec zero{0, 0};
    sigtimedwait(&block, nullptr, &zero);
  }
  pthread_sigmask(SIG_SETMASK, &old, nullptr);
  return ok;
}

int reap(pid_t pid, bool kill_first) {
  if (kill_first) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  return status;
}

}  // namespace

TrialResult run_external_trial(const std::vector<std::string>& command, const TrialSpec& trial,
                               std::chrono::milliseconds timeout) {
  using clock = std::chrono::steady_clock;
  if (command.empty()) return failed(trial.trial_id, ErrorCode::kCrashedTrainer, "empty command");

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    return failed(trial.trial_id, ErrorCode::kIo, std::strerror(errno));
  }
  Fd child_stdin(in_pipe[0]), to_child(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    return failed(trial.trial_id, ErrorCode::kIo, std::strerror(errno));
  }
  Fd from_child(out_pipe[0]), child_stdout(out_pipe[1]);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, child_stdin.fd, STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, child_stdout.fd, STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  child_stdin.reset();
  child_stdout.reset();
  if (rc != 0) {
    return failed(trial.trial_id, ErrorCode::kCrashedTrainer,
                  "cannot spawn '" + command[0] + "': " + std::strerror(rc));
  }

  const auto deadline = clock::now() + timeout;
  write_all(to_child.fd, encode_request(trial) + "\n");
  to_child.reset();

  ResponseReader reader(trial.trial_id);
  std::string pending;
  char buf[4096];
  try {
    for (;;) {
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (remaining <= 0) {
        reap(pid, true);
        return failed(trial.trial_id, ErrorCode::kTimeout,
                      "trainer exceeded " + std::to_string(timeout.count()) + " ms");
      }
      pollfd pfd{from_child.fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
      if (ready < 0 && errno != EINTR) throw Error(ErrorCode::kIo, std::strerror(errno));
      if (ready <= 0) continue;
      const ssize_t n = ::read(from_child.fd, buf, sizeof(buf));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kIo, std::strerror(errno));
      }
      if (n == 0) break;
      pending.append(buf, static_cast<std::size_t>(n));
      for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n')) {
        reader.feed(std::string_view(pending).substr(0, nl));
        pending.erase(0, nl + 1);
      }
    }
    if (!pending.empty()) reader.feed(pending);
  } catch (const Error& e) {
    reap(pid, true);
    return failed(trial.trial_id, e.code(), e.what());
  }

  const int status = reap(pid, false);
  const bool clean_exit = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  if (reader.finished()) return reader.result();
  if (!clean_exit) {
    std::string why = WIFSIGNALED(status)
                          ? "killed by signal " + std::to_string(WTERMSIG(status))
                          : "exit status " + std::to_string(WEXITSTATUS(status));
    return failed(trial.trial_id, ErrorCode::kCrashedTrainer, "trainer ended without result (" + why + ")");
  }
  return failed(trial.trial_id, ErrorCode::kProtocol, "trainer exited without a result message");
}

Evaluator external_evaluator(std::vector<std::string> command, std::chrono::milliseconds timeout) {
  return [command = std::move(command), timeout](const TrialSpec& trial) {
    return run_external_trial(command, trial, timeout);
  };
}

}  // namespace proxyhpo
