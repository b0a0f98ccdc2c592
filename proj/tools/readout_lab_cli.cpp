// Copyright 2026 The Readout Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// readout-lab: experiments, meta-training and hull audits from the shell.
//
// Exit codes: 0 success, 1 computational or assertion failure, 2 usage or
// input error.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "readout_lab/errors.hpp"
#include "readout_lab/experiments.hpp"
#include "readout_lab/geometry.hpp"
#include "readout_lab/graphkit.hpp"
#include "readout_lab/io.hpp"
#include "readout_lab/metatrain.hpp"
#include "readout_lab/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

bool is_integer(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

// Overlays `patch` onto `base`. Every key must already exist in `base` and
// keep a compatible type; the defaults double as the schema.
void merge_strict(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw UsageError("config " + path + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw UsageError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    const json& v = it.value();
    bool ok = false;
    if (slot.is_object()) {
      merge_strict(slot, v, key);
      continue;
    } else if (slot.is_number_unsigned()) {
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    } else if (slot.is_number_integer()) {
      ok = is_integer(v);
    } else if (slot.is_number_float()) {
      ok = v.is_number();
    } else if (slot.is_array()) {
      ok = v.is_array();
    } else {
      ok = v.type() == slot.type();
    }
    if (!ok) throw UsageError("config: key '" + key + "' has the wrong type");
    slot = v;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

// A manifest from an earlier run is accepted in place of a config file.
json config_patch(const std::string& path, const std::string& command) {
  if (path.empty()) return json::object();
  json j = read_json_file(path);
  if (j.is_object() && j.contains("command") && j.contains("config")) {
    if (j["command"] != command)
      throw UsageError("manifest " + path + " is for '" + j["command"].get<std::string>() + "'");
    return j["config"];
  }
  return j;
}

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

// Flags shared by the experiment and train commands.
struct CommonFlags {
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t seeds = 0;
  std::size_t jobs = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* seeds_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;

  void add_to(CLI::App& app, bool with_seed_count) {
    app.add_option("--out", out, "Output directory (default $READOUT_LAB_OUT or ./readout-lab-out)");
    app.add_option("--config", config, "JSON config file or an earlier manifest.json");
    seed_opt = app.add_option("--seed", seed, "Base seed");
    if (with_seed_count) {
      seeds_opt = app.add_option("--seeds", seeds, "Number of seeds");
      jobs_opt = app.add_option("--jobs", jobs, "Worker threads for the seed fan-out");
    }
  }

  void apply(json& eff) const {
    if (seeds_opt && seeds_opt->count() && seeds == 0) throw UsageError("--seeds must be positive");
    if (jobs_opt && jobs_opt->count() && jobs == 0) throw UsageError("--jobs must be positive");
    if (seed_opt && seed_opt->count()) eff["seed"] = seed;
    if (seeds_opt && seeds_opt->count()) eff["n_seeds"] = seeds;
    if (jobs_opt && jobs_opt->count()) eff["jobs"] = jobs;
  }

  std::string out_dir() const {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("READOUT_LAB_OUT"); env && *env) return env;
    return "readout-lab-out";
  }
};

// -------------------------------------------------------------- artifacts

class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_ + ": " + ec.message());
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    out << content;
    if (!out) throw rlab::Error("cannot write " + path(name));
    checksums_[name] = rlab::fnv1a_hex(content);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  // For files produced by library writers.
  void record(const std::string& name) { checksums_[name] = rlab::file_checksum(path(name)); }

  void manifest(const std::string& command, const json& config,
                const std::vector<std::uint64_t>& seeds) {
    json m;
    m["command"] = command;
    m["version"] = std::string(rlab::kVersion);
    m["config"] = config;
    m["seeds"] = seeds;
    m["out"] = dir_;
    m["artifacts"] = checksums_;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m.dump(2) << "\n";
    if (!out) throw rlab::Error("cannot write manifest");
  }

 private:
  std::string dir_;
  std::map<std::string, std::string> checksums_;
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metadata(const std::string& experiment, const json& config,
              const std::vector<std::uint64_t>& seeds) {
  return {{"experiment", experiment},
          {"version", std::string(rlab::kVersion)},
          {"config", config},
          {"seeds", seeds}};
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

// ------------------------------------------------------------ experiments

int run_translation(const CommonFlags& flags) {
  const rlab::TranslationConfig def;
  json eff = {{"n", def.n},           {"d", def.d},         {"margin", def.margin},
              {"t_grid", def.t_grid}, {"lambda", def.lambda}, {"seed", def.seed},
              {"n_seeds", def.n_seeds}, {"jobs", def.jobs}};
  merge_strict(eff, config_patch(flags.config, "experiment translation"), "");
  flags.apply(eff);
  rlab::TranslationConfig cfg;
  cfg.n = field<std::size_t>(eff, "n");
  cfg.d = field<std::size_t>(eff, "d");
  cfg.margin = field<double>(eff, "margin");
  cfg.t_grid = field<std::vector<double>>(eff, "t_grid");
  cfg.lambda = field<double>(eff, "lambda");
  cfg.seed = field<std::uint64_t>(eff, "seed");
  cfg.n_seeds = field<std::size_t>(eff, "n_seeds");
  cfg.jobs = field<std::size_t>(eff, "jobs");

  const auto r = rlab::run_translation_sweep(cfg);
  const auto proto = r.column("proto_acc"), ridge = r.column("ridge_acc");
  std::vector<double> proto_mean(r.values.size());
  double ridge_min = 1.0;
  for (std::size_t v = 0; v < r.values.size(); ++v) {
    proto_mean[v] = r.mean(v, proto);
    ridge_min = std::min(ridge_min, r.mean(v, ridge));
  }
  json meta = metadata("translation", eff, r.seeds);
  meta["summary"] = {
      {"proto_acc_at_max_t", proto_mean.back()},
      {"ridge_acc_min", ridge_min},
      {"spearman_proto_acc_t",
       r.values.size() >= 2 ? finite_or_null(rlab::spearman(r.values, proto_mean)) : json(nullptr)}};

  Artifacts art(flags.out_dir());
  art.write("translation.csv", render([&](std::ostream& o) { rlab::write_sweep_csv(o, r); }));
  art.write_json("translation.json", meta);
  art.manifest("experiment translation", eff, r.seeds);
  std::cout << "translation: prototype accuracy " << proto_mean.front() << " -> "
            << proto_mean.back() << ", ridge min " << ridge_min << "\n";
  return 0;
}

int run_bimodal(const CommonFlags& flags) {
  const rlab::BimodalConfig def;
  json eff = {{"points",
               {{"d", def.points.d},
                {"n_bc", def.points.n_bc},
                {"n_mode", def.points.n_mode},
                {"noise", def.points.noise}}},
              {"delta_grid", def.delta_grid},
              {"lambda", def.lambda},
              {"dominance_tol", def.dominance_tol},
              {"seed", def.seed},
              {"n_seeds", def.n_seeds},
              {"jobs", def.jobs}};
  merge_strict(eff, config_patch(flags.config, "experiment bimodal"), "");
  flags.apply(eff);
  rlab::BimodalConfig cfg;
  const json& pts = eff["points"];
  cfg.points.d = field<std::size_t>(pts, "d");
  cfg.points.n_bc = field<std::size_t>(pts, "n_bc");
  cfg.points.n_mode = field<std::size_t>(pts, "n_mode");
  cfg.points.noise = field<double>(pts, "noise");
  cfg.delta_grid = field<std::vector<double>>(eff, "delta_grid");
  cfg.lambda = field<double>(eff, "lambda");
  cfg.dominance_tol = field<double>(eff, "dominance_tol");
  cfg.seed = field<std::uint64_t>(eff, "seed");
  cfg.n_seeds = field<std::size_t>(eff, "n_seeds");
  cfg.jobs = field<std::size_t>(eff, "jobs");

  const auto r = rlab::run_bimodal_sweep(cfg);
  const auto s = rlab::summarize_bimodal(r);
  json meta = metadata("bimodal", eff, r.seeds);
  meta["summary"] = {{"dominated_instances", s.dominated_instances},
                     {"dominated_proto_recall_a", finite_or_null(s.dominated_proto_recall_a)},
                     {"dominated_proto_acc", finite_or_null(s.dominated_proto_acc)},
                     {"dominated_ridge_recall_a", finite_or_null(s.dominated_ridge_recall_a)},
                     {"min_ridge_recall_a", s.min_ridge_recall_a},
                     {"min_ridge_recall_a_delta", s.min_ridge_recall_a_delta},
                     {"first_zero_recall_delta", finite_or_null(s.first_zero_recall_delta)},
                     {"first_dominated_delta", finite_or_null(s.first_dominated_delta)}};

  Artifacts art(flags.out_dir());
  art.write("bimodal.csv", render([&](std::ostream& o) { rlab::write_sweep_csv(o, r); }));
  art.write_json("bimodal.json", meta);
  art.manifest("experiment bimodal", eff, r.seeds);
  std::cout << "bimodal: " << s.dominated_instances << " dominated instances, prototype recall(A) "
            << s.dominated_proto_recall_a << ", prototype accuracy " << s.dominated_proto_acc
            << ", ridge recall(A) " << s.dominated_ridge_recall_a << "\n";
  return 0;
}

int run_calibration(const CommonFlags& flags) {
  const rlab::CalibrationConfig def;
  json eff = {{"clusters",
               {{"n", def.clusters.n},
                {"classes", def.clusters.classes},
                {"d", def.clusters.d},
                {"noise", def.clusters.noise}}},
              {"spread", def.spread},
              {"shift_factor", def.shift_factor},
              {"r_min", def.r_min},
              {"r_max", def.r_max},
              {"logistic_lambda", def.logistic_lambda},
              {"n_bins", def.n_bins},
              {"seed", def.seed},
              {"n_seeds", def.n_seeds},
              {"jobs", def.jobs}};
  merge_strict(eff, config_patch(flags.config, "experiment calibration"), "");
  flags.apply(eff);
  rlab::CalibrationConfig cfg;
  const json& cl = eff["clusters"];
  cfg.clusters.n = field<std::size_t>(cl, "n");
  cfg.clusters.classes = field<std::size_t>(cl, "classes");
  cfg.clusters.d = field<std::size_t>(cl, "d");
  cfg.clusters.noise = field<double>(cl, "noise");
  cfg.spread = field<double>(eff, "spread");
  cfg.shift_factor = field<double>(eff, "shift_factor");
  cfg.r_min = field<double>(eff, "r_min");
  cfg.r_max = field<double>(eff, "r_max");
  cfg.logistic_lambda = field<double>(eff, "logistic_lambda");
  cfg.n_bins = field<std::size_t>(eff, "n_bins");
  cfg.seed = field<std::uint64_t>(eff, "seed");
  cfg.n_seeds = field<std::size_t>(eff, "n_seeds");
  cfg.jobs = field<std::size_t>(eff, "jobs");

  const auto suite = rlab::run_calibration_suite(cfg);
  json summary = json::object();
  for (const auto& g : suite.geometries) {
    json geo = {{"temperature_mean", g.temperature_mean}};
    for (const auto& m : g.methods) geo[m.method + "_ece"] = m.ece_mean;
    summary[g.geometry] = geo;
  }
  json meta = metadata("calibration", eff, suite.seeds);
  meta["summary"] = summary;

  Artifacts art(flags.out_dir());
  art.write("calibration.csv",
            render([&](std::ostream& o) { rlab::write_calibration_csv(o, suite); }));
  art.write("reliability.csv",
            render([&](std::ostream& o) { rlab::write_reliability_csv(o, suite); }));
  art.write_json("calibration.json", meta);
  art.manifest("experiment calibration", eff, suite.seeds);
  for (const auto& g : suite.geometries) {
    std::cout << g.geometry << ":";
    for (const auto& m : g.methods) std::cout << " " << m.method << " ECE " << m.ece_mean;
    std::cout << "\n";
  }
  return 0;
}

int run_worked(const CommonFlags& flags) {
  json eff = json::object();
  merge_strict(eff, config_patch(flags.config, "experiment worked-examples"), "");
  const auto checks = rlab::run_worked_examples();
  std::size_t passed = 0;
  for (const auto& c : checks) {
    passed += c.pass ? 1 : 0;
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.example << "  " << c.quantity
              << "  expected " << c.expected << "  actual " << c.actual << "\n";
  }
  std::cout << passed << "/" << checks.size() << " checks passed\n";
  json meta = metadata("worked-examples", eff, {});
  meta["summary"] = {{"checks", checks.size()}, {"passed", passed}};

  Artifacts art(flags.out_dir());
  art.write("worked_examples.csv",
            render([&](std::ostream& o) { rlab::write_worked_csv(o, checks); }));
  art.write_json("worked_examples.json", meta);
  art.manifest("experiment worked-examples", eff, {});
  return passed == checks.size() ? 0 : 1;
}

// ------------------------------------------------------------------ train

const char* variant_name(rlab::EncoderVariant v) {
  return v == rlab::EncoderVariant::Mlp ? "mlp" : "hop-attention";
}

json train_json(const rlab::TrainConfig& c) {
  return {{"preset", ""},
          {"steps", c.steps},
          {"episodes_per_step", c.episodes_per_step},
          {"lambda", c.lambda},
          {"label_smoothing", c.label_smoothing},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"k_min", c.k_min},
          {"k_max", c.k_max},
          {"q_min", c.q_min},
          {"q_max", c.q_max},
          {"max_classes", c.max_classes},
          {"task_weights", c.task_weights},
          {"seed", c.seed},
          {"encoder",
           {{"variant", variant_name(c.encoder.variant)},
            {"hops", c.encoder.hops},
            {"dropout", c.encoder.dropout},
            {"d_in", c.encoder.d_in},
            {"hidden", c.encoder.hidden},
            {"d_z", c.encoder.d_z}}},
          {"data",
           {{"node_graphs", json::array()},
            {"edge_graphs", json::array()},
            {"graph_set", ""},
            {"power_iters", 2}}}};
}

rlab::TrainConfig train_from_json(const json& j) {
  rlab::TrainConfig c;
  c.steps = field<std::size_t>(j, "steps");
  c.episodes_per_step = field<std::size_t>(j, "episodes_per_step");
  c.lambda = field<double>(j, "lambda");
  c.label_smoothing = field<double>(j, "label_smoothing");
  c.lr = field<double>(j, "lr");
  c.weight_decay = field<double>(j, "weight_decay");
  c.clip_norm = field<double>(j, "clip_norm");
  c.beta1 = field<double>(j, "beta1");
  c.beta2 = field<double>(j, "beta2");
  c.adam_eps = field<double>(j, "adam_eps");
  c.k_min = field<std::size_t>(j, "k_min");
  c.k_max = field<std::size_t>(j, "k_max");
  c.q_min = field<std::size_t>(j, "q_min");
  c.q_max = field<std::size_t>(j, "q_max");
  c.max_classes = field<std::size_t>(j, "max_classes");
  c.task_weights = field<std::array<double, 3>>(j, "task_weights");
  c.seed = field<std::uint64_t>(j, "seed");
  const json& e = j.at("encoder");
  const auto variant = field<std::string>(e, "variant");
  if (variant == "mlp") {
    c.encoder.variant = rlab::EncoderVariant::Mlp;
  } else if (variant == "hop-attention") {
    c.encoder.variant = rlab::EncoderVariant::HopAttention;
  } else {
    throw UsageError("encoder.variant must be 'mlp' or 'hop-attention'");
  }
  c.encoder.hops = field<std::size_t>(e, "hops");
  c.encoder.dropout = field<double>(e, "dropout");
  c.encoder.d_in = field<std::size_t>(e, "d_in");
  c.encoder.hidden = field<std::size_t>(e, "hidden");
  c.encoder.d_z = field<std::size_t>(e, "d_z");
  return c;
}

rlab::GraphData load_graph(const std::string& path) {
  try {
    return rlab::read_graph_file(path);
  } catch (const rlab::Error& e) {
    throw UsageError(e.what());
  }
}

// Lines of "<graph file> <label>", paths relative to the list file.
std::vector<rlab::GraphData> load_graph_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read graph set " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<rlab::GraphData> graphs;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string file;
    long long label = -1;
    if (!(ls >> file)) continue;
    std::string extra;
    if (!(ls >> label) || label < 0 || (ls >> extra))
      throw UsageError(path + ":" + std::to_string(no) + ": expected '<file> <label>'");
    rlab::GraphData g = load_graph((base / file).string());
    g.graph_label = static_cast<std::size_t>(label);
    graphs.push_back(std::move(g));
  }
  return graphs;
}

struct TrainFlags {
  std::string preset;
  std::size_t steps = 0, episodes = 1;
  double lr = 0.0;
  std::string variant;
  std::vector<std::string> node_graphs, edge_graphs;
  std::string graph_set;
  CLI::Option *preset_opt, *steps_opt, *episodes_opt, *lr_opt, *variant_opt, *node_opt,
      *edge_opt, *set_opt;
};

int run_train(const CommonFlags& flags, const TrainFlags& tf) {
  const json patch = config_patch(flags.config, "train");
  if (!patch.is_object()) throw UsageError("config: expected an object");

  // The preset and seed pick the base layer, so resolve them first.
  std::string preset = patch.value("preset", std::string());
  if (tf.preset_opt->count()) preset = tf.preset;
  if (!preset.empty() && preset != "bimodal-demo")
    throw UsageError("--preset: unknown preset '" + preset + "'");
  std::uint64_t seed = 0;
  if (patch.contains("seed")) seed = field<std::uint64_t>(patch, "seed");
  if (flags.seed_opt->count()) seed = flags.seed;

  std::vector<rlab::TaskSource> sources;
  json eff;
  if (preset == "bimodal-demo") {
    rlab::DemoSetup demo = rlab::bimodal_demo(seed);
    eff = train_json(demo.config);
    sources = std::move(demo.sources);
  } else {
    rlab::TrainConfig base;
    base.seed = seed;
    eff = train_json(base);
  }
  const json preset_encoder = eff["encoder"];
  merge_strict(eff, patch, "");
  eff["preset"] = preset;
  eff["seed"] = seed;
  if (tf.steps_opt->count()) eff["steps"] = tf.steps;
  if (tf.episodes_opt->count()) eff["episodes_per_step"] = tf.episodes;
  if (tf.lr_opt->count()) eff["lr"] = tf.lr;
  if (tf.variant_opt->count()) eff["encoder"]["variant"] = tf.variant;
  if (tf.node_opt->count()) eff["data"]["node_graphs"] = tf.node_graphs;
  if (tf.edge_opt->count()) eff["data"]["edge_graphs"] = tf.edge_graphs;
  if (tf.set_opt->count()) eff["data"]["graph_set"] = tf.graph_set;

  rlab::TrainConfig cfg = train_from_json(eff);
  try {
    cfg.validate();
  } catch (const rlab::ParameterError& e) {
    throw UsageError(e.what());
  }

  const json& data = eff["data"];
  const auto node_files = field<std::vector<std::string>>(data, "node_graphs");
  const auto edge_files = field<std::vector<std::string>>(data, "edge_graphs");
  const auto set_file = field<std::string>(data, "graph_set");
  const bool has_data = !node_files.empty() || !edge_files.empty() || !set_file.empty();
  if (!preset.empty()) {
    if (has_data) throw UsageError("a preset brings its own data; drop the graph inputs");
    if (eff["encoder"]["d_in"] != preset_encoder["d_in"] ||
        eff["encoder"]["hops"] != preset_encoder["hops"])
      throw UsageError("the preset fixes encoder.d_in and encoder.hops");
  } else {
    if (!has_data)
      throw UsageError("no training data: give --preset, --node-graph, --edge-graph or --graph-set");
    rlab::SourceOptions so;
    so.d_in = cfg.encoder.d_in;
    so.hops = cfg.encoder.hops;
    so.power_iters = field<std::size_t>(data, "power_iters");
    so.max_demand = cfg.k_max + cfg.q_max;
    so.seed = rlab::derive_seed(seed, 2);
    auto load_all = [](const std::vector<std::string>& files, bool need_labels) {
      std::vector<rlab::GraphData> gs;
      for (const auto& f : files) {
        gs.push_back(load_graph(f));
        if (need_labels && !gs.back().node_labels)
          throw UsageError(f + ": node-task graphs need a labels section");
      }
      return gs;
    };
    if (!node_files.empty())
      sources.push_back(rlab::make_task_source(rlab::TaskKind::Node, load_all(node_files, true), so));
    if (!edge_files.empty())
      sources.push_back(rlab::make_task_source(rlab::TaskKind::Edge, load_all(edge_files, false), so));
    if (!set_file.empty())
      sources.push_back(rlab::make_task_source(rlab::TaskKind::Graph, load_graph_set(set_file), so));
  }

  const rlab::TrainResult result = rlab::train(cfg, sources);

  json summary = {{"episodes", result.log.size()}};
  if (!result.log.empty()) {
    const std::size_t window = std::min<std::size_t>(50, result.log.size());
    const std::size_t window_steps =
        std::min(cfg.steps, (window + cfg.episodes_per_step - 1) / cfg.episodes_per_step);
    summary["final_window"] = window;
    summary["final_window_query_accuracy"] = rlab::final_window_accuracy(result.log, window);
    summary["frozen_prototype_accuracy"] = rlab::replay_prototype_accuracy(
        result.initial, cfg, sources, cfg.steps - window_steps, cfg.steps);
    summary["final_loss"] = result.log.back().loss;
  }

  Artifacts art(flags.out_dir());
  rlab::save_checkpoint(art.path("checkpoint.mchi"), result.params);
  art.record("checkpoint.mchi");
  art.write("train_log.csv",
            render([&](std::ostream& o) { rlab::write_train_log(o, result.log); }));
  json meta = metadata("train", eff, {seed});
  meta["summary"] = summary;
  art.write_json("train.json", meta);
  art.manifest("train", eff, {seed});
  if (summary.contains("final_window_query_accuracy")) {
    std::cout << "train: " << cfg.steps << " steps, final-window query accuracy "
              << summary["final_window_query_accuracy"].get<double>()
              << ", frozen prototype " << summary["frozen_prototype_accuracy"].get<double>()
              << "\n";
  } else {
    std::cout << "train: 0 steps, checkpoint holds the initialization\n";
  }
  return 0;
}

// ------------------------------------------------------------------ audit

int run_audit(const std::string& out_dir, const std::string& emb_path,
              const std::string& labels_path) {
  rlab::Matrix z;
  std::vector<std::size_t> labels;
  try {
    z = rlab::read_matrix_file(emb_path);
    labels = rlab::read_labels_file(labels_path);
  } catch (const rlab::Error& e) {
    throw UsageError(e.what());
  }
  if (labels.size() != z.rows())
    throw UsageError("row-count mismatch: " + std::to_string(z.rows()) + " embeddings, " +
                     std::to_string(labels.size()) + " labels");

  // Class ids may be sparse; prototypes follow sorted id order.
  std::vector<std::size_t> ids(labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 3)
    throw UsageError("insufficient classes: the hull audit needs at least 3, got " +
                     std::to_string(ids.size()));
  if (z.cols() < 2) throw UsageError("embeddings need at least 2 columns");

  rlab::Matrix protos(ids.size(), z.cols(), 0.0);
  std::vector<std::size_t> counts(ids.size(), 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const std::size_t c = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
    ++counts[c];
    for (std::size_t j = 0; j < z.cols(); ++j) protos(c, j) += z(i, j);
  }
  for (std::size_t c = 0; c < ids.size(); ++c)
    for (std::size_t j = 0; j < z.cols(); ++j) protos(c, j) /= static_cast<double>(counts[c]);

  const rlab::HullReport report = rlab::flag_interior(protos);
  json classes = json::array();
  json flagged = json::array();
  for (std::size_t c = 0; c < ids.size(); ++c) {
    const auto& h = report.classes[c];
    json weights = json::object();
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (k != c) weights[std::to_string(ids[k])] = h.weights[k];
    classes.push_back({{"label", ids[c]},
                       {"count", counts[c]},
                       {"d_ch", h.d_ch},
                       {"d_ch_norm", h.d_ch_norm},
                       {"weights", weights},
                       {"interior", h.interior}});
    if (h.interior) flagged.push_back(ids[c]);
  }
  json vertices = json::array();
  for (std::size_t v : report.hull_vertices) vertices.push_back(ids[v]);
  const json out = {{"version", std::string(rlab::kVersion)},
                    {"classes", classes},
                    {"mean_pairwise_distance", report.mean_pairwise_distance},
                    {"pca_hull_vertices", vertices},
                    {"interior", flagged}};

  std::ostringstream pca;
  pca << "label,pc1,pc2,hull_vertex\n";
  for (std::size_t c = 0; c < ids.size(); ++c) {
    const bool vertex = std::find(report.hull_vertices.begin(), report.hull_vertices.end(), c) !=
                        report.hull_vertices.end();
    pca << ids[c] << "," << rlab::format_double(report.pca(c, 0)) << ","
        << rlab::format_double(report.pca(c, 1)) << "," << (vertex ? 1 : 0) << "\n";
  }

  Artifacts art(out_dir);
  art.write_json("hull_report.json", out);
  art.write("pca.csv", pca.str());
  art.manifest("audit", {{"embeddings", emb_path}, {"labels", labels_path}}, {});
  for (std::size_t c = 0; c < ids.size(); ++c)
    std::cout << "class " << ids[c] << ": d_CH " << report.classes[c].d_ch << " (normalized "
              << report.classes[c].d_ch_norm << ")"
              << (report.classes[c].interior ? "  INTERIOR" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"readout-lab: few-shot readout experiments, meta-training and hull audits"};
  app.require_subcommand(1);

  CommonFlags exp_flags;
  std::string exp_name;
  auto* exp = app.add_subcommand("experiment", "Run a synthetic experiment driver");
  exp->add_option("name", exp_name, "translation | bimodal | calibration | worked-examples")
      ->required()
      ->check(CLI::IsMember({"translation", "bimodal", "calibration", "worked-examples"}));
  exp_flags.add_to(*exp, true);

  CommonFlags train_flags;
  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Episodic meta-training through the ridge readout");
  train_flags.add_to(*tr, false);
  tf.preset_opt = tr->add_option("--preset", tf.preset, "Built-in setup: bimodal-demo");
  tf.steps_opt = tr->add_option("--steps", tf.steps, "Training steps");
  tf.episodes_opt = tr->add_option("--episodes-per-step", tf.episodes,
                                   "1: one task per step, 3: one of each task kind")
                        ->check(CLI::IsMember({1, 3}));
  tf.lr_opt = tr->add_option("--lr", tf.lr, "Peak learning rate")->check(CLI::NonNegativeNumber);
  tf.variant_opt = tr->add_option("--variant", tf.variant, "Encoder: hop-attention | mlp")
                       ->check(CLI::IsMember({"hop-attention", "mlp"}));
  tf.node_opt = tr->add_option("--node-graph", tf.node_graphs, "Labeled graph file for node tasks");
  tf.edge_opt = tr->add_option("--edge-graph", tf.edge_graphs, "Graph file for edge tasks");
  tf.set_opt = tr->add_option("--graph-set", tf.graph_set,
                              "List of '<graph file> <label>' lines for graph tasks");

  std::string audit_out, emb, lab;
  auto* au = app.add_subcommand("audit", "Convex-hull audit of class prototypes");
  au->add_option("--embeddings", emb, "CSV or binary container matrix, one row per example")
      ->required();
  au->add_option("--labels", lab, "One class id per line")->required();
  au->add_option("--out", audit_out, "Output directory");

  auto* ver = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? 0 : 2;
  }

  try {
    if (*ver) {
      std::cout << "readout-lab " << rlab::kVersion << "\n";
      return 0;
    }
    if (*exp) {
      if (exp_name == "translation") return run_translation(exp_flags);
      if (exp_name == "bimodal") return run_bimodal(exp_flags);
      if (exp_name == "calibration") return run_calibration(exp_flags);
      return run_worked(exp_flags);
    }
    if (*tr) return run_train(train_flags, tf);
    CommonFlags dir;
    dir.out = audit_out;
    return run_audit(dir.out_dir(), emb, lab);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rlab::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rlab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rlab::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
}
