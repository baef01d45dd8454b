#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "proxyhpo/analysis.hpp"
#include "proxyhpo/error.hpp"
#include "proxyhpo/hpo.hpp"
#include "proxyhpo/measures.hpp"
#include "proxyhpo/parallel.hpp"
#include "proxyhpo/proxy_net.hpp"
#include "proxyhpo/synth.hpp"
#include "proxyhpo/trainer.hpp"
#include "proxyhpo/version.hpp"
#include "proxyhpo/volume_io.hpp"

namespace proxyhpo::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidInput, path.string() + " is not JSON: " + e.what());
  }
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& s : split(csv, ',')) out.push_back(to_double(s));
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

std::vector<int> parse_ints(const std::string& csv, std::size_t want) {
  std::vector<int> out;
  for (const auto& s : split(csv, ',')) {
    const double v = to_double(s);
    if (v != static_cast<int>(v)) throw UsageError("not an integer: '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.size() == 1 && want == 3) out = {out[0], out[0], out[0]};
  if (out.size() != want) throw UsageError("expected " + std::to_string(want) + " values in '" + csv + "'");
  return out;
}

std::vector<FamilySpec> parse_families(const std::string& text) {
  std::vector<FamilySpec> out;
  for (const auto& entry : split(text, ',')) {
    const auto parts = split(entry, ':');
    if (parts.size() != 2) throw UsageError("family entries are count:profile, got '" + entry + "'");
    out.push_back({static_cast<int>(to_double(parts[0])), static_cast<int>(to_double(parts[1]))});
  }
  return out;
}

// Option values as the JSON accepted by --config.
json resolved_config(const CLI::App* sub, const std::string& command) {
  json doc = {{"command", command}};
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_type_size() == 0) {
      doc[name] = opt->count() > 0;
      continue;
    }
    const std::string value = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
    if (value.empty()) continue;
    try {
      std::size_t used = 0;
      const double number = std::stod(value, &used);
      if (used == value.size()) {
        if (value.find_first_of(".eE") == std::string::npos) {
          doc[name] = static_cast<long long>(number);
        } else {
          doc[name] = number;
        }
        continue;
      }
    } catch (const std::exception&) {
    }
    doc[name] = value;
  }
  return doc;
}

// Replaces "--config FILE" with the file's options, placed right after the
// subcommand path so that explicit flags (parsed later) take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path) return args;

  std::size_t head = 0;
  while (head < rest.size() && head < 2 && !rest[head].empty() && rest[head][0] != '-') ++head;
  std::string command;
  for (std::size_t i = 0; i < head; ++i) command += (i ? " " : "") + rest[i];

  const json doc = read_json(*config_path);
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  if (doc.contains("command") && doc["command"].get<std::string>() != command) {
    throw UsageError("config is for command '" + doc["command"].get<std::string>() + "', not '" +
                     command + "'");
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    if (key == "command" || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  std::vector<std::string> out(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(head));
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(head), rest.end());
  return out;
}

void add_config_option(CLI::App* sub) {
  sub->add_option("--config", "JSON file of option values; explicit flags override it");
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProtocol:
    case ErrorCode::kTimeout:
    case ErrorCode::kCrashedTrainer:
    case ErrorCode::kTrainerReported:
      return kExitTrainer;
    default:
      return kExitData;
  }
}

// ---- subcommand option blocks ---------------------------------------------

struct SynthOptions {
  int n = 12;
  std::string shape = "32";
  std::string spacing = "1.5,1.5,2.0";
  std::string families;
  double jitter = 0.02;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
};

struct IngestOptions {
  std::string input;
  std::string name;
  std::string out;
};

struct MeasureOptions {
  std::string manifest;
  std::string measure = "mi";
  bool labelcrop = false;
  int bins = 32;
  std::string window = "9";
  int cube = kDefaultCubeSize;
  int workers = 1;
};

struct PairwiseOptions {
  MeasureOptions m;
  std::string out;
};

struct SelectOptions {
  MeasureOptions m;
  std::string scores;
  int budget = 0;
  bool random = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct NetspecOptions {
  int base_channels = kDefaultBaseChannels;
  int in_channels = 1;
  int out_channels = 2;
  std::string out;
};

struct SearchOptions {
  std::string mode = "grid";
  std::string trainer = "surrogate";
  int workers = 1;
  int max_steps = 200;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string network = "full";
  int base_channels = kDefaultBaseChannels;
  int in_channels = 1;
  int out_channels = 2;
  std::string manifest;
  std::string selection;
  int n_train = 32;
  int n_val = 9;
  std::string optimizers = "adam,rmsprop,adamax,novograd";
  std::string lr_set = "0.001,0.0006,0.0004,0.0001";
  std::string p_set = "0.5";
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  int lr_bins = 16;
  int p_bins = 11;
  int n_trials = 64;
  double alpha = 1.0;
  double baseline_decay = 0.9;
  double cost_scale = 1e-4;
  double timeout = 3600.0;
  std::string out;
};

struct AnalyzeOptions {
  std::string proxy;
  std::string full;
  std::string a;
  std::string b;
  std::string reference;
  std::string candidate;
  std::string out;
};

void add_measure_options(CLI::App* sub, MeasureOptions& m, bool manifest_required) {
  auto* manifest = sub->add_option("--manifest", m.manifest, "dataset manifest JSON");
  if (manifest_required) manifest->required();
  sub->add_option("--measure", m.measure, "mi or ncc")->check(CLI::IsMember({"mi", "ncc"}));
  sub->add_flag("--labelcrop", m.labelcrop, "crop to the label bounding box before measuring");
  sub->add_option("--bins", m.bins, "MI histogram bins");
  sub->add_option("--window", m.window, "NCC window, 'w' or 'wx,wy,wz'");
  sub->add_option("--cube", m.cube, "canonical cube edge length");
  sub->add_option("--workers", m.workers, "worker threads");
}

MeasureConfig measure_config(const MeasureOptions& m) {
  MeasureConfig cfg;
  cfg.kind = parse_measure_kind(m.measure);
  cfg.roi_mode = m.labelcrop ? RoiMode::kLabelCrop : RoiMode::kWholeVolume;
  cfg.mi_bins = m.bins;
  const auto w = parse_ints(m.window, 3);
  cfg.ncc_window = {w[0], w[1], w[2]};
  cfg.canonical_cube = m.cube;
  cfg.validate();
  return cfg;
}

json matrix_json(const PairwiseMatrix& matrix, const std::vector<std::string>& ids,
                 const std::vector<double>& scores, const MeasureConfig& cfg) {
  json rows = json::array();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < matrix.size(); ++j) row.push_back(matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  return {{"measure", std::string(to_string(cfg.kind))},
          {"roi_mode", std::string(to_string(cfg.roi_mode))},
          {"mi_bins", cfg.mi_bins},
          {"ncc_window", {cfg.ncc_window.x, cfg.ncc_window.y, cfg.ncc_window.z}},
          {"canonical_cube", cfg.canonical_cube},
          {"ids", ids},
          {"values", std::move(rows)},
          {"scores", scores}};
}

// ---- subcommand bodies -----------------------------------------------------

int run_synth(const SynthOptions& o, const json& resolved) {
  SynthConfig cfg;
  cfg.n_items = o.n;
  const auto shape = parse_ints(o.shape, 3);
  cfg.shape = {shape[0], shape[1], shape[2]};
  const auto sp = parse_doubles(o.spacing);
  if (sp.size() != 3) throw UsageError("--spacing needs 3 values");
  cfg.spacing = {sp[0], sp[1], sp[2]};
  cfg.families = o.families.empty() ? default_families(o.n) : parse_families(o.families);
  cfg.jitter = o.jitter;
  cfg.seed = o.seed;
  const auto dir = prepare_out_dir(o.out);
  const auto manifest = gen_synthetic_dataset(cfg, dir, o.workers);
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << "wrote " << manifest.items.size() << " items to " << (dir / "manifest.json").string()
            << "\n";
  return kExitOk;
}

int run_ingest(const IngestOptions& o, const json& resolved) {
  const auto volume = read_nifti1_file(o.input);
  const auto dir = prepare_out_dir(o.out);
  fs::path stem = fs::path(o.input).stem();
  const auto name = o.name.empty() ? stem.string() : o.name;
  const auto loc = write_raw(volume, dir / name);
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << "wrote " << loc.payload.string() << "\n";
  return kExitOk;
}

int run_pairwise(const PairwiseOptions& o, const json& resolved) {
  const auto cfg = measure_config(o.m);
  const auto manifest = load_manifest(o.m.manifest);
  const auto matrix = pairwise_matrix(manifest, cfg, o.m.workers);
  const auto scores = importance_scores(matrix);
  const auto ids = manifest.ids();
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "matrix.csv", matrix_to_csv(matrix, ids));
  write_text(dir / "scores.csv", scores_to_csv(scores, ids));
  write_text(dir / "matrix.json", matrix_json(matrix, ids, scores, cfg).dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << "wrote " << ids.size() << "x" << ids.size() << " " << to_string(cfg.kind)
            << " matrix to " << (dir / "matrix.csv").string() << "\n";
  return kExitOk;
}

int run_select(const SelectOptions& o, const json& resolved) {
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::string method;
  if (!o.scores.empty()) {
    const auto table = parse_scores_csv(read_text(o.scores));
    ids = table.ids;
    scores = table.scores;
    method = "scores";
  } else if (!o.m.manifest.empty()) {
    const auto manifest = load_manifest(o.m.manifest);
    ids = manifest.ids();
    if (!o.random) {
      const auto cfg = measure_config(o.m);
      scores = importance_scores(pairwise_matrix(manifest, cfg, o.m.workers));
      method = std::string(to_string(cfg.kind)) + (o.m.labelcrop ? "+labelcrop" : "");
    }
  } else {
    throw UsageError("select needs --scores or --manifest");
  }
  if (o.random && !o.seed) throw UsageError("--random requires --seed");
  if (o.budget < 1) throw Error(ErrorCode::kBudget, "budget must be >= 1");

  std::vector<std::size_t> chosen;
  if (o.random) {
    chosen = select_random(ids.size(), static_cast<std::size_t>(o.budget), *o.seed);
    method = "random";
  } else {
    chosen = select_proxy(scores, static_cast<std::size_t>(o.budget));
  }

  json doc = {{"method", method}, {"budget", o.budget}, {"indices", chosen}};
  json chosen_ids = json::array();
  for (auto i : chosen) chosen_ids.push_back(ids[i]);
  doc["ids"] = chosen_ids;
  if (o.seed && chosen.size() >= 2) {
    const auto split_idx = split_fifty_fifty(chosen, *o.seed);
    json train = json::array(), val = json::array();
    for (auto i : split_idx.train) train.push_back(ids[i]);
    for (auto i : split_idx.val) val.push_back(ids[i]);
    doc["split"] = {{"seed", *o.seed}, {"train", train}, {"val", val}};
  }
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "selection.json", doc.dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << "selected " << chosen.size() << " of " << ids.size() << " items\n";
  return kExitOk;
}

int run_netspec(const NetspecOptions& o, const json& resolved) {
  const auto full = full_spec(o.base_channels, o.in_channels, o.out_channels);
  const auto full_count = param_count(full);
  json proxies = json::array();
  for (const auto& spec : proxy_schedule(full)) {
    const auto count = param_count(spec);
    proxies.push_back({{"network", spec},
                       {"param_count", count},
                       {"capacity_ratio", static_cast<double>(count) / full_count}});
  }
  json doc = {{"full", {{"network", full}, {"param_count", full_count}}}, {"proxies", proxies}};
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "netspec.json", doc.dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

UNetSpec pick_network(const std::string& name, const UNetSpec& full) {
  if (name == "full") return full;
  const auto schedule = proxy_schedule(full);
  if (name == "proxy5") return schedule[0];
  if (name == "proxy4") return schedule[1];
  if (name == "proxy3") return schedule[2];
  throw UsageError("unknown network '" + name + "'");
}

void fill_data(const SearchOptions& o, TrialTemplate& tmpl) {
  if (o.manifest.empty()) {
    char id[32];
    for (int i = 0; i < o.n_train; ++i) {
      std::snprintf(id, sizeof(id), "train_%03d", i);
      tmpl.train_items.push_back(id);
    }
    for (int i = 0; i < o.n_val; ++i) {
      std::snprintf(id, sizeof(id), "val_%03d", i);
      tmpl.val_items.push_back(id);
    }
    return;
  }
  const auto manifest = load_manifest(o.manifest);
  tmpl.manifest = fs::absolute(o.manifest).string();
  std::vector<std::string> ids = manifest.ids();
  if (!o.selection.empty()) {
    const json sel = read_json(o.selection);
    if (sel.contains("split")) {
      tmpl.train_items = sel["split"].at("train").get<std::vector<std::string>>();
      tmpl.val_items = sel["split"].at("val").get<std::vector<std::string>>();
      return;
    }
    ids = sel.at("ids").get<std::vector<std::string>>();
  }
  std::vector<std::size_t> idx(ids.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto split = split_fifty_fifty(idx, o.seed);
  for (auto i : split.train) tmpl.train_items.push_back(ids[i]);
  for (auto i : split.val) tmpl.val_items.push_back(ids[i]);
}

int run_search(const SearchOptions& o, const json& resolved) {
  TrialTemplate tmpl;
  tmpl.reference = full_spec(o.base_channels, o.in_channels, o.out_channels);
  tmpl.network = pick_network(o.network, tmpl.reference);
  tmpl.max_steps = o.max_steps;
  tmpl.cost.scale = o.cost_scale;
  fill_data(o, tmpl);

  Evaluator evaluator;
  if (o.trainer == "surrogate") {
    evaluator = surrogate_evaluator(o.noise, tmpl.reference);
  } else if (o.trainer.rfind("exec:", 0) == 0) {
    auto command = split(o.trainer.substr(5), ' ');
    if (command.empty()) throw UsageError("exec: needs a command");
    evaluator = external_evaluator(
        command, std::chrono::milliseconds(static_cast<long long>(o.timeout * 1000.0)));
  } else {
    throw UsageError("--trainer must be 'surrogate' or 'exec:<command>'");
  }

  SearchSpace space;
  space.optimizers.clear();
  for (const auto& name : split(o.optimizers, ',')) space.optimizers.push_back(parse_optimizer(name));

  SearchReport report;
  if (o.mode == "grid") {
    space.learning_rates = parse_doubles(o.lr_set);
    space.shift_probs = parse_doubles(o.p_set);
    report = grid_search(space, tmpl, evaluator, o.workers, o.seed);
  } else if (o.mode == "rl") {
    space.learning_rates = LogRange{o.lr_min, o.lr_max, o.lr_bins};
    space.shift_probs = LinearRange{0.0, 1.0, o.p_bins};
    report = reinforce_search(space, tmpl, evaluator,
                              {o.n_trials, o.alpha, o.baseline_decay, o.seed});
  } else {
    throw UsageError("--mode must be grid or rl");
  }

  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& t : report.trials) failed += !t.result.ok();
  std::cout << report.trials.size() << " trials, " << failed << " failed, "
            << report.ledger.total() << " GPU-hours";
  if (auto best = report.best_hyperparams()) {
    std::cout << ", best " << config_id(*best) << " dice "
              << report.trials[*report.best].result.val_dice;
  }
  std::cout << "\n";
  if (report.partial) {
    for (const auto& t : report.trials) {
      if (!t.result.ok()) std::cerr << t.spec.trial_id << ": " << t.result.message << "\n";
    }
    return kExitTrainer;
  }
  return kExitOk;
}

SearchReport load_report(const std::string& path) { return report_from_json(read_json(path)); }

double ledger_hours(const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  return load_report(value).ledger.total();
}

int run_correlate(const AnalyzeOptions& o, const json& resolved) {
  const auto corr = correlation_report(load_report(o.proxy), load_report(o.full));
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "pairs.csv", paired_runs_csv(corr));
  json doc = {{"r", corr.r},
              {"n_pairs", corr.pairs.size()},
              {"dropped", corr.dropped},
              {"correlation_band", correlation_band(corr.r)}};
  write_text(dir / "correlation.json", doc.dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
  return kExitOk;
}

int run_distance(const AnalyzeOptions& o, const json& resolved) {
  const auto a = load_report(o.a);
  const auto b = load_report(o.b);
  const auto ha = a.best_hyperparams();
  const auto hb = b.best_hyperparams();
  if (!ha || !hb) throw Error(ErrorCode::kInvalidInput, "both reports need a best trial");
  const double d = relative_hp_distance(*ha, *hb, b.space);
  json doc = {{"distance", d},
              {"a", hyperparams_to_json(*ha)},
              {"b", hyperparams_to_json(*hb)},
              {"definition",
               "sqrt(((log10 lr_a - log10 lr_b) / (log10 lr_max - log10 lr_min))^2 + (p_a - p_b)^2)"}};
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "distance.json", doc.dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
  return kExitOk;
}

int run_speedup(const AnalyzeOptions& o, const json& resolved) {
  const double ref = ledger_hours(o.reference);
  const double cand = ledger_hours(o.candidate);
  json doc = {{"reference_hours", ref}, {"candidate_hours", cand}, {"speedup", speedup(ref, cand)}};
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "speedup.json", doc.dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
  return kExitOk;
}

int run_report(const AnalyzeOptions& o, const json& resolved) {
  const auto proxy = load_report(o.proxy);
  const auto full = load_report(o.full);
  const auto summary = summarize(proxy, full);
  const auto dir = prepare_out_dir(o.out);
  write_text(dir / "pairs.csv", paired_runs_csv(correlation_report(proxy, full)));
  write_text(dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  std::cout << summary_to_json(summary).dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Proxy data and proxy network hyper-parameter search toolkit", "proxyhpo"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.option_defaults()->always_capture_default();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic ellipsoid dataset");
  synth_cmd->add_option("--n", synth.n, "number of items");
  synth_cmd->add_option("--shape", synth.shape, "volume shape, 'n' or 'nx,ny,nz'");
  synth_cmd->add_option("--spacing", synth.spacing, "voxel spacing in mm, 'sx,sy,sz'");
  synth_cmd->add_option("--families", synth.families,
                        "family layout 'count:profile,...' (default n-2 duplicates + 2 singletons)");
  synth_cmd->add_option("--jitter", synth.jitter, "within-family intensity jitter");
  synth_cmd->add_option("--seed", synth.seed, "random seed")->required();
  synth_cmd->add_option("--workers", synth.workers, "worker threads");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  add_config_option(synth_cmd);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "convert a NIfTI-1 volume to the raw format");
  ingest_cmd->add_option("--input", ingest.input, ".nii file")->required();
  ingest_cmd->add_option("--name", ingest.name, "output name (default: input stem)");
  ingest_cmd->add_option("--out", ingest.out, "output directory")->required();
  add_config_option(ingest_cmd);

  PairwiseOptions pairwise;
  auto* pairwise_cmd = app.add_subcommand("pairwise", "pairwise measure matrix and importance scores");
  add_measure_options(pairwise_cmd, pairwise.m, true);
  pairwise_cmd->add_option("--out", pairwise.out, "output directory")->required();
  add_config_option(pairwise_cmd);

  SelectOptions select;
  auto* select_cmd = app.add_subcommand("select", "choose a proxy subset within a budget");
  add_measure_options(select_cmd, select.m, false);
  select_cmd->add_option("--scores", select.scores, "scores.csv from pairwise");
  select_cmd->add_option("--budget", select.budget, "number of items to keep")->required();
  select_cmd->add_flag("--random", select.random, "random-selection baseline");
  select_cmd->add_option("--seed", select.seed, "seed for random selection and the 50/50 split");
  select_cmd->add_option("--out", select.out, "output directory")->required();
  add_config_option(select_cmd);

  NetspecOptions netspec;
  auto* netspec_cmd = app.add_subcommand("netspec", "full and proxy U-Net specs with parameter counts");
  netspec_cmd->add_option("--base-channels", netspec.base_channels, "full-model base channels");
  netspec_cmd->add_option("--in-channels", netspec.in_channels, "input image channels");
  netspec_cmd->add_option("--out-channels", netspec.out_channels, "output classes including background");
  netspec_cmd->add_option("--out", netspec.out, "output directory")->required();
  add_config_option(netspec_cmd);

  SearchOptions search;
  auto* search_cmd = app.add_subcommand("search", "hyper-parameter search");
  search_cmd->add_option("--mode", search.mode, "grid or rl")->check(CLI::IsMember({"grid", "rl"}));
  search_cmd->add_option("--trainer", search.trainer, "surrogate or exec:<command>");
  search_cmd->add_option("--workers", search.workers, "concurrent trials (grid mode)");
  search_cmd->add_option("--max-steps", search.max_steps, "training steps per trial");
  search_cmd->add_option("--noise", search.noise, "surrogate noise standard deviation");
  search_cmd->add_option("--seed", search.seed, "master seed")->required();
  search_cmd->add_option("--network", search.network, "full, proxy5, proxy4 or proxy3");
  search_cmd->add_option("--base-channels", search.base_channels, "full-model base channels");
  search_cmd->add_option("--in-channels", search.in_channels, "input image channels");
  search_cmd->add_option("--out-channels", search.out_channels, "output classes including background");
  search_cmd->add_option("--manifest", search.manifest, "dataset manifest (ids for trials)");
  search_cmd->add_option("--selection", search.selection, "selection.json restricting the items");
  search_cmd->add_option("--n-train", search.n_train, "placeholder train items without a manifest");
  search_cmd->add_option("--n-val", search.n_val, "placeholder val items without a manifest");
  search_cmd->add_option("--optimizers", search.optimizers, "comma-separated optimizers");
  search_cmd->add_option("--lr-set", search.lr_set, "grid learning rates");
  search_cmd->add_option("--p-set", search.p_set, "grid intensity-shift probabilities");
  search_cmd->add_option("--lr-min", search.lr_min, "rl learning-rate range minimum");
  search_cmd->add_option("--lr-max", search.lr_max, "rl learning-rate range maximum");
  search_cmd->add_option("--lr-bins", search.lr_bins, "rl learning-rate bins");
  search_cmd->add_option("--p-bins", search.p_bins, "rl probability points on [0, 1]");
  search_cmd->add_option("--n-trials", search.n_trials, "rl trial count");
  search_cmd->add_option("--alpha", search.alpha, "rl policy step size");
  search_cmd->add_option("--baseline-decay", search.baseline_decay, "rl reward baseline decay");
  search_cmd->add_option("--cost-scale", search.cost_scale, "GPU-hours per (item x capacity x step)");
  search_cmd->add_option("--timeout", search.timeout, "per-trial timeout in seconds (exec trainers)");
  search_cmd->add_option("--out", search.out, "output directory")->required();
  add_config_option(search_cmd);

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "proxy fidelity analytics");
  analyze_cmd->require_subcommand(1);
  auto* correlate_cmd = analyze_cmd->add_subcommand("correlate", "Pearson r of proxy vs full Dice");
  correlate_cmd->add_option("--proxy", analyze.proxy, "proxy report.json")->required();
  correlate_cmd->add_option("--full", analyze.full, "full report.json")->required();
  correlate_cmd->add_option("--out", analyze.out, "output directory")->required();
  add_config_option(correlate_cmd);
  auto* distance_cmd = analyze_cmd->add_subcommand("distance", "relative distance of best HPs");
  distance_cmd->add_option("--a", analyze.a, "report.json")->required();
  distance_cmd->add_option("--b", analyze.b, "reference report.json (its space is used)")->required();
  distance_cmd->add_option("--out", analyze.out, "output directory")->required();
  add_config_option(distance_cmd);
  auto* speedup_cmd = analyze_cmd->add_subcommand("speedup", "GPU-hour speedup");
  speedup_cmd->add_option("--reference", analyze.reference, "report.json or GPU hours")->required();
  speedup_cmd->add_option("--candidate", analyze.candidate, "report.json or GPU hours")->required();
  speedup_cmd->add_option("--out", analyze.out, "output directory")->required();
  add_config_option(speedup_cmd);

  AnalyzeOptions report;
  auto* report_cmd = app.add_subcommand("report", "summary JSON {r, n_pairs, distance, speedup}");
  report_cmd->add_option("--proxy", report.proxy, "proxy report.json")->required();
  report_cmd->add_option("--full", report.full, "full report.json")->required();
  report_cmd->add_option("--out", report.out, "output directory")->required();
  add_config_option(report_cmd);

  try {
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, resolved_config(synth_cmd, "synth"));
    if (ingest_cmd->parsed()) return run_ingest(ingest, resolved_config(ingest_cmd, "ingest"));
    if (pairwise_cmd->parsed()) return run_pairwise(pairwise, resolved_config(pairwise_cmd, "pairwise"));
    if (select_cmd->parsed()) return run_select(select, resolved_config(select_cmd, "select"));
    if (netspec_cmd->parsed()) return run_netspec(netspec, resolved_config(netspec_cmd, "netspec"));
    if (search_cmd->parsed()) return run_search(search, resolved_config(search_cmd, "search"));
    if (correlate_cmd->parsed()) {
      return run_correlate(analyze, resolved_config(correlate_cmd, "analyze correlate"));
    }
    if (distance_cmd->parsed()) {
      return run_distance(analyze, resolved_config(distance_cmd, "analyze distance"));
    }
    if (speedup_cmd->parsed()) {
      return run_speedup(analyze, resolved_config(speedup_cmd, "analyze speedup"));
    }
    if (report_cmd->parsed()) return run_report(report, resolved_config(report_cmd, "report"));
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace proxyhpo::cli
