// ftbrain: command-line pipeline over the ftbrain library.
//
//   synth -> select -> split -> pretrain -> train -> eval -> cam
//   trend and curves work on CSV files from earlier runs.
//
// Every subcommand takes --config FILE (JSON) plus flag overrides and writes
// under one output directory:
//   <out>/manifest.json  data/  folds/  checkpoints/  reports/  curves/  cams/
// Exit status: 0 ok, 1 invalid input or configuration, 2 runtime failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ftbrain/cam.hpp"
#include "ftbrain/checkpoint.hpp"
#include "ftbrain/dataset.hpp"
#include "ftbrain/entropy.hpp"
#include "ftbrain/error.hpp"
#include "ftbrain/folds.hpp"
#include "ftbrain/manifest.hpp"
#include "ftbrain/pretrain.hpp"
#include "ftbrain/rng.hpp"
#include "ftbrain/stats.hpp"
#include "ftbrain/synth.hpp"
#include "ftbrain/train.hpp"
#include "ftbrain/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ftbrain;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kTrainKeys = {"epochs", "batch_size",         "lr",             "seed",
                                          "freeze_group", "images_per_subject", "selection_mode", "k_folds"};
const std::set<std::string> kRunKeys = {"data_dir", "out_dir",     "task",         "preset",          "jobs",
                                        "cam_head", "subject_vote", "subjects",    "classes",         "dims",
                                        "pretrained", "pretrain_epochs", "pretrain_images", "export_pgm",
                                        "cam_limit", "ground_truth"};

// Flag values as typed by the user; only options actually given are applied.
struct Overrides {
  std::map<std::string, std::string> str;
  std::map<std::string, double> num;
  std::map<std::string, std::size_t> count;
  std::map<std::string, bool> flag;
};

struct Cli {
  std::string config_path;
  Overrides over;
  std::map<std::string, CLI::Option*> opts;
};

std::string flag_names(const std::string& key, const std::string& extra) {
  std::string flag = key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  std::string names = "--" + flag;
  if (flag != key) names += ",--" + key;
  if (!extra.empty()) names += "," + extra;
  return names;
}

void add_str(CLI::App* app, Cli& cli, const std::string& key, const std::string& help, const std::string& extra = {}) {
  cli.opts[app->get_name() + "." + key] = app->add_option(flag_names(key, extra), cli.over.str[key], help);
}
void add_num(CLI::App* app, Cli& cli, const std::string& key, const std::string& help) {
  cli.opts[app->get_name() + "." + key] = app->add_option(flag_names(key, {}), cli.over.num[key], help);
}
void add_count(CLI::App* app, Cli& cli, const std::string& key, const std::string& help,
               const std::string& extra = {}) {
  cli.opts[app->get_name() + "." + key] = app->add_option(flag_names(key, extra), cli.over.count[key], help);
}
void add_flag(CLI::App* app, Cli& cli, const std::string& key, const std::string& help) {
  cli.opts[app->get_name() + "." + key] = app->add_flag(flag_names(key, {}), cli.over.flag[key], help);
}

// Config file merged with the flags given to `sub`; flags win.
json merged_config(const Cli& cli, const CLI::App* sub) {
  json cfg = json::object();
  if (!cli.config_path.empty()) {
    std::ifstream in(cli.config_path);
    if (!in) throw ConfigError("cli: cannot read config " + cli.config_path);
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("cli: config is not valid JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) throw ConfigError("cli: config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (!kTrainKeys.count(key) && !kRunKeys.count(key)) {
        throw ConfigError("cli: unknown config key '" + key + "'");
      }
    }
  }
  const std::string prefix = sub->get_name() + ".";
  for (const auto& [name, opt] : cli.opts) {
    if (name.rfind(prefix, 0) != 0 || opt->count() == 0) continue;
    const std::string key = name.substr(prefix.size());
    if (auto it = cli.over.str.find(key); it != cli.over.str.end()) cfg[key] = it->second;
    else if (auto in = cli.over.num.find(key); in != cli.over.num.end()) cfg[key] = in->second;
    else if (auto ic = cli.over.count.find(key); ic != cli.over.count.end()) cfg[key] = ic->second;
    else if (auto ib = cli.over.flag.find(key); ib != cli.over.flag.end()) cfg[key] = ib->second;
  }
  if (!cfg.contains("seed")) {
    if (const char* env = std::getenv("FTBRAIN_SEED")) {
      try {
        cfg["seed"] = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError("cli: FTBRAIN_SEED is not an unsigned integer");
      }
    }
  }
  return cfg;
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("cli: bad value for '" + key + "': " + e.what());
  }
}

std::uint64_t seed_of(const json& cfg) { return get_or<std::uint64_t>(cfg, "seed", 0); }

fs::path output_dir(const json& cfg) {
  if (cfg.contains("out_dir")) return fs::path(get_or<std::string>(cfg, "out_dir", ""));
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
  return fs::path("runs") / (std::string(stamp) + "-" + std::to_string(seed_of(cfg)));
}

ModelSpec model_spec(const json& cfg, Task task) {
  const std::string preset = get_or<std::string>(cfg, "preset", "desk");
  ModelSpec spec;
  if (preset == "desk") spec = ModelSpec::desk();
  else if (preset == "paper") spec = ModelSpec::paper();
  else throw ConfigError("cli: unknown preset '" + preset + "' (paper, desk)");
  spec.head = task_head(task);
  spec.cam_head = get_or<bool>(cfg, "cam_head", false);
  return spec;
}

TrainConfig train_config(const json& cfg) {
  const std::string preset = get_or<std::string>(cfg, "preset", "desk");
  json sub = json::object();
  for (const auto& key : kTrainKeys) {
    if (cfg.contains(key)) sub[key] = cfg[key];
  }
  return TrainConfig::from_json(sub, preset == "paper" ? TrainConfig::paper() : TrainConfig::desk());
}

Task task_of(const json& cfg) { return parse_task(get_or<std::string>(cfg, "task", "ad-nc")); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError("cli: " + what + " not found: " + p.string());
}

// Records a step in <out>/manifest.json; timestamps go to run.log only.
void record_step(const fs::path& out, const std::string& step, const json& cfg, const json& outputs) {
  const fs::path path = out / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = json::object();
  }
  manifest["steps"][step] = {{"config", cfg}, {"outputs", outputs}};
  std::ofstream(path) << manifest.dump(2) << '\n';

  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
  std::ofstream(out / "run.log", std::ios::app) << stamp << ' ' << step << " ok\n";
}

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

json fold_plan_json(const FoldPlan& plan) { return {{"k", plan.k}, {"folds", plan.folds}}; }

FoldPlan read_fold_plan(const fs::path& path) {
  std::ifstream in(path);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError("cli", "cannot parse fold plan " + path.string());
  FoldPlan plan;
  plan.k = j.at("k").get<std::size_t>();
  plan.folds = j.at("folds").get<std::vector<std::vector<std::string>>>();
  check_disjoint(plan);
  return plan;
}

fs::path data_dir(const json& cfg, const fs::path& out) {
  return cfg.contains("data_dir") ? fs::path(get_or<std::string>(cfg, "data_dir", "")) : out / "data";
}

std::string fold_name(std::size_t f) { return "fold" + std::to_string(f); }

// ---- subcommands ----

int cmd_synth(const json& cfg) {
  const fs::path out = output_dir(cfg);
  const std::uint64_t seed = seed_of(cfg);
  const std::size_t per_class = get_or<std::size_t>(cfg, "subjects", 30);
  if (per_class == 0) throw ConfigError("cli: subjects must be positive");
  const std::string classes = get_or<std::string>(cfg, "classes", "AD,MCI,NC");
  std::vector<Label> labels;
  for (const std::string& name : split_csv_line(classes)) labels.push_back(parse_label(name));
  Dims dims = kDeskSynthDims;
  if (cfg.contains("dims")) {
    const auto d = get_or<std::vector<std::size_t>>(cfg, "dims", {});
    if (d.size() != 3) throw ConfigError("cli: dims must be [z, y, x]");
    dims = {d[0], d[1], d[2]};
  }

  const fs::path dir = data_dir(cfg, out);
  fs::create_directories(dir);
  std::vector<SubjectRow> index;
  for (Label l : labels) {
    for (std::size_t i = 0; i < per_class; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%03zu", std::string(label_name(l)).c_str(), i);
      const std::uint64_t subject_seed = derive_seed(seed, static_cast<std::uint64_t>(l) * 1000003u + i);
      const Volume v = synth_generate(l, subject_seed, dims, id);
      const fs::path file = dir / (std::string(id) + ".mvol");
      save_volume(v, file);
      index.push_back({id, l, file.string()});
    }
  }
  write_subject_index(index, dir / "subjects.csv");
  record_step(out, "synth", cfg, {{"subjects", (dir / "subjects.csv").string()}, {"count", index.size()}});
  std::cout << "synth: " << index.size() << " volumes in " << dir.string() << '\n';
  return 0;
}

int cmd_select(const json& cfg) {
  const fs::path out = output_dir(cfg);
  const fs::path index_path = data_dir(cfg, out) / "subjects.csv";
  require_file(index_path, "subject index");
  const TrainConfig tc = train_config(cfg);
  const bool export_pgm = get_or<bool>(cfg, "export_pgm", false);

  std::vector<ManifestRow> rows;
  for (const SubjectRow& s : read_subject_index(index_path)) {
    const Volume v = load_volume(s.path, s.subject_id, s.label);
    const auto picked = select_slices(v, tc.images_per_subject, tc.selection, tc.seed, s.path);
    if (export_pgm) {
      fs::create_directories(out / "slices");
      for (const ManifestRow& r : picked) {
        SliceRecord rec{r.subject_id, r.label, r.slice_index, r.entropy_bits, v.plane(r.slice_index), v.type()};
        normalize(rec);
        write_pgm(rec.pixels, out / "slices" / (r.subject_id + "_" + std::to_string(r.slice_index) + ".pgm"));
      }
    }
    rows.insert(rows.end(), picked.begin(), picked.end());
  }
  write_manifest(rows, out / "slices.csv");
  record_step(out, "select", cfg, {{"manifest", (out / "slices.csv").string()}, {"rows", rows.size()}});
  std::cout << "select: " << rows.size() << " slices\n";
  return 0;
}

int cmd_split(const json& cfg) {
  const fs::path out = output_dir(cfg);
  const fs::path index_path = data_dir(cfg, out) / "subjects.csv";
  require_file(index_path, "subject index");
  const TrainConfig tc = train_config(cfg);
  const Task task = task_of(cfg);

  std::vector<SubjectEntry> subjects;
  for (const SubjectRow& s : read_subject_index(index_path)) {
    if (task_target(task, s.label) >= 0) subjects.push_back({s.subject_id, s.label});
  }
  const FoldPlan plan = kfold_subject_split(subjects, tc.k_folds, tc.seed);
  check_disjoint(plan);
  fs::create_directories(out / "folds");
  write_json(out / "folds" / "folds.json", fold_plan_json(plan));
  record_step(out, "split", cfg, {{"folds", (out / "folds" / "folds.json").string()}});
  std::cout << "split: " << plan.k << " folds over " << subjects.size() << " subjects\n";
  return 0;
}

int cmd_pretrain(const json& cfg) {
  const fs::path out = output_dir(cfg);
  const ModelSpec spec = model_spec(cfg, task_of(cfg));
  SourceTaskConfig sc;
  sc.epochs = get_or<std::size_t>(cfg, "pretrain_epochs", sc.epochs);
  sc.train_images = get_or<std::size_t>(cfg, "pretrain_images", sc.train_images);
  sc.val_images = std::max<std::size_t>(kSourceClasses, sc.train_images / 3);
  if (sc.epochs == 0 || sc.train_images < static_cast<std::size_t>(kSourceClasses)) {
    throw ConfigError("cli: pretrain_epochs and pretrain_images must be positive");
  }

  const PretrainResult r = pretrain_source(spec, sc, seed_of(cfg));
  fs::create_directories(out / "checkpoints");
  fs::create_directories(out / "curves");
  fs::create_directories(out / "reports");
  write_checkpoint(r.checkpoint, out / "checkpoints" / "pretrained.mnet");
  export_curves(r.curve, out / "curves" / "pretrain.csv");
  write_json(out / "reports" / "pretrain.json", {{"val_accuracy", r.val_accuracy},
                                                 {"conv1_init_variance", r.conv1_init_variance},
                                                 {"conv1_final_variance", r.conv1_final_variance}});
  record_step(out, "pretrain", cfg, {{"checkpoint", (out / "checkpoints" / "pretrained.mnet").string()}});
  std::printf("pretrain: source-task val accuracy %.4f\n", r.val_accuracy);
  return 0;
}

struct Experiment {
  fs::path out;
  Task task;
  ModelSpec spec;
  TrainConfig tc;
  SampleSet data;
  FoldPlan plan;
};

Experiment load_experiment(const json& cfg) {
  Experiment ex;
  ex.out = output_dir(cfg);
  ex.task = task_of(cfg);
  ex.spec = model_spec(cfg, ex.task);
  ex.tc = train_config(cfg);
  require_file(ex.out / "slices.csv", "slice manifest");
  require_file(ex.out / "folds" / "folds.json", "fold plan");
  ex.plan = read_fold_plan(ex.out / "folds" / "folds.json");
  const auto rows = read_manifest(ex.out / "slices.csv");
  for (const ManifestRow& r : rows) require_file(r.path, "volume");
  VolumeCache cache;
  ex.data = build_samples(rows, ex.task, ex.spec, cache);
  if (ex.data.size() == 0) throw ConfigError("cli: no slices belong to task " + std::string(task_name(ex.task)));
  return ex;
}

int cmd_train(const json& cfg) {
  const json echo = cfg;
  ModelInit init;
  std::optional<fs::path> pretrained;
  if (cfg.contains("pretrained")) {
    pretrained = get_or<std::string>(cfg, "pretrained", "");
    require_file(*pretrained, "pretrained checkpoint");
  }
  Experiment ex = load_experiment(cfg);
  init.spec = ex.spec;
  if (pretrained) init.pretrained = read_checkpoint(*pretrained);

  const std::size_t jobs = get_or<std::size_t>(cfg, "jobs", 1);
  const bool vote = get_or<bool>(cfg, "subject_vote", false);
  const CrossValidation cv = cross_validate(ex.data, ex.plan, ex.tc, init, std::max<std::size_t>(jobs, 1), vote);

  for (const char* d : {"checkpoints", "curves", "reports"}) fs::create_directories(ex.out / d);
  json outputs = {{"checkpoints", json::array()}, {"curves", json::array()}};
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const fs::path ck = ex.out / "checkpoints" / (fold_name(f) + ".mnet");
    const fs::path cu = ex.out / "curves" / (fold_name(f) + ".csv");
    write_checkpoint(cv.folds[f].checkpoint, ck);
    export_curves(cv.folds[f].curve, cu);
    outputs["checkpoints"].push_back(ck.string());
    outputs["curves"].push_back(cu.string());
  }
  write_fold_report_csv(cv.report, ex.out / "reports" / "folds.csv");
  json summary = report_summary(cv.report, ex.tc);
  summary["task"] = task_name(ex.task);
  summary["model"] = ex.spec.to_json();
  json initial = json::array();
  for (const auto& fo : cv.folds) initial.push_back(fo.curve.initial_train_loss);
  summary["initial_train_loss"] = initial;
  write_json(ex.out / "reports" / "summary.json", summary);
  record_step(ex.out, "train", echo, outputs);
  std::printf("train: mean acc %.4f std %.4f over %zu folds\n", cv.report.mean_accuracy, cv.report.std_accuracy,
              cv.folds.size());
  return 0;
}

int cmd_eval(const json& cfg) {
  Experiment ex = load_experiment(cfg);
  for (std::size_t f = 0; f < ex.plan.k; ++f) {
    require_file(ex.out / "checkpoints" / (fold_name(f) + ".mnet"), "fold checkpoint");
  }
  const bool vote = get_or<bool>(cfg, "subject_vote", false);
  std::vector<FoldReport> folds;
  for (std::size_t f = 0; f < ex.plan.k; ++f) {
    const Model model = load_checkpoint(ex.out / "checkpoints" / (fold_name(f) + ".mnet"), ex.spec);
    FoldReport r = evaluate(model, ex.data.restrict_to(ex.plan.test_subjects(f)), vote);
    r.fold = f;
    folds.push_back(std::move(r));
  }
  const EvalReport report = aggregate(std::move(folds));
  fs::create_directories(ex.out / "reports");
  write_fold_report_csv(report, ex.out / "reports" / "eval.csv");
  json summary = report_summary(report, ex.tc);
  summary["subject_vote"] = vote;
  json confusion = json::array();
  for (const FoldReport& r : report.folds) confusion.push_back(r.confusion);
  summary["confusion"] = confusion;
  write_json(ex.out / "reports" / "eval.json", summary);
  record_step(ex.out, "eval", cfg, {{"report", (ex.out / "reports" / "eval.json").string()}});
  std::printf("eval: mean acc %.4f std %.4f\n", report.mean_accuracy, report.std_accuracy);
  return 0;
}

int cmd_cam(const json& cfg) {
  Experiment ex = load_experiment(cfg);
  if (!ex.spec.cam_head) throw ConfigError("cli: cam needs a model trained with --cam-head");
  const std::size_t limit = get_or<std::size_t>(cfg, "cam_limit", 4);
  const bool ground_truth = get_or<bool>(cfg, "ground_truth", false);
  const auto rows = read_manifest(ex.out / "slices.csv");
  VolumeCache cache;
  fs::create_directories(ex.out / "cams");
  json written = json::array();
  for (std::size_t f = 0; f < ex.plan.k; ++f) {
    const Model model = load_checkpoint(ex.out / "checkpoints" / (fold_name(f) + ".mnet"), ex.spec);
    const auto test = ex.plan.test_subjects(f);
    std::size_t done = 0;
    for (const ManifestRow& r : rows) {
      if (done == limit) break;
      const int target = task_target(ex.task, r.label);
      if (target < 0 || !std::binary_search(test.begin(), test.end(), r.subject_id)) continue;
      const Image img = preprocess_slice(cache.get(r), r.slice_index, ex.spec.height, ex.spec.width);
      const int cls = ground_truth ? target : predicted_class(model, img);
      const Heatmap heat = compute_cam(model, img, cls);
      const std::string stem = fold_name(f) + "_" + r.subject_id + "_" + std::to_string(r.slice_index);
      write_overlay(img, heat, ex.out / "cams" / (stem + ".ppm"));
      write_heatmap_csv(heat, ex.out / "cams" / (stem + ".csv"));
      written.push_back({{"file", stem}, {"class", cls}, {"peak", {heat.peak_row, heat.peak_col}}});
      ++done;
    }
  }
  record_step(ex.out, "cam", cfg, {{"cams", written}});
  std::cout << "cam: " << written.size() << " heatmaps\n";
  return 0;
}

std::vector<double> read_column(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("cli", "empty CSV " + path.string());
  const auto header = split_csv_line(line);
  std::size_t col = 0;
  if (!column.empty()) {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) throw ConfigError("cli: no column '" + column + "' in " + path.string());
    col = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (col >= cells.size()) throw FormatError("cli", "short CSV row in " + path.string());
    try {
      values.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw FormatError("cli", "non-numeric value '" + cells[col] + "' in " + path.string());
    }
  }
  return values;
}

int cmd_trend(const std::string& csv, const std::string& column) {
  const TrendResult t = mann_kendall(read_column(csv, column));
  const json j = {{"S", t.s}, {"variance", t.variance}, {"z", t.z}, {"p_two_sided", t.p_two_sided}, {"n", t.n}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_curves(const std::vector<std::string>& inputs, const std::string& mean_out) {
  std::vector<LearningCurve> curves;
  for (const auto& p : inputs) {
    require_file(p, "curve CSV");
    curves.push_back(read_curves(p));
  }
  json summary = json::array();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& pts = curves[i].points;
    if (pts.empty()) throw FormatError("cli", "no epochs in " + inputs[i]);
    summary.push_back({{"file", inputs[i]},
                       {"epochs", pts.size()},
                       {"first_train_loss", pts.front().train_loss},
                       {"final_train_loss", pts.back().train_loss},
                       {"final_val_loss", pts.back().val_loss}});
  }
  if (!mean_out.empty()) {
    LearningCurve mean;
    const std::size_t n = curves.front().points.size();
    for (const auto& c : curves) {
      if (c.points.size() != n) throw ConfigError("cli: curves differ in length");
    }
    for (std::size_t e = 0; e < n; ++e) {
      CurvePoint p{curves.front().points[e].epoch, 0.0, 0.0};
      for (const auto& c : curves) {
        p.train_loss += c.points[e].train_loss / static_cast<double>(curves.size());
        p.val_loss += c.points[e].val_loss / static_cast<double>(curves.size());
      }
      mean.points.push_back(p);
    }
    export_curves(mean, mean_out);
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ftbrain: entropy-selected MRI slices, transfer learning and class activation maps"};
  app.require_subcommand(1);
  app.footer("Config keys mirror the long flags (use underscores, e.g. images_per_subject).\n"
             "Flags given on the command line override the config file.");
  Cli cli;

  auto make = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", cli.config_path, "JSON config file")->check(CLI::ExistingFile);
    add_count(s, cli, "seed", "master seed (fallback: FTBRAIN_SEED, then 0)");
    add_str(s, cli, "out_dir", "output directory (default runs/<timestamp>-<seed>)", "--out");
    return s;
  };
  auto model_opts = [&](CLI::App* s) {
    add_str(s, cli, "task", "ad-nc | ad-mci | mci-nc | 3way (default ad-nc)");
    add_str(s, cli, "preset", "paper | desk (default desk)");
    add_flag(s, cli, "cam_head", "global-average-pool head (needed for cam)");
  };
  auto train_opts = [&](CLI::App* s) {
    add_count(s, cli, "epochs", "training epochs");
    add_count(s, cli, "batch_size", "mini-batch size");
    add_num(s, cli, "lr", "Adam learning rate");
    add_str(s, cli, "freeze_group", "All | G1 | G2 | G3 | G4");
    add_count(s, cli, "k_folds", "cross-validation folds");
    add_count(s, cli, "jobs", "folds trained in parallel (default 1)");
    add_flag(s, cli, "subject_vote", "majority vote per subject instead of per-slice accuracy");
  };

  CLI::App* synth = make("synth", "generate synthetic MVOL volumes and a subject index");
  add_count(synth, cli, "subjects", "subjects per class (default 30)");
  add_str(synth, cli, "classes", "comma-separated labels (default AD,MCI,NC)");
  add_str(synth, cli, "data_dir", "volume directory (default <out>/data)");

  CLI::App* select = make("select", "rank slices by entropy and write the slice manifest");
  add_count(select, cli, "images_per_subject", "slices kept per subject", "--k");
  add_str(select, cli, "selection_mode", "entropy | random");
  add_str(select, cli, "data_dir", "volume directory (default <out>/data)");
  add_flag(select, cli, "export_pgm", "also write selected slices as PGM");

  CLI::App* split = make("split", "subject-wise stratified k-fold plan");
  add_count(split, cli, "k_folds", "number of folds");
  add_str(split, cli, "task", "ad-nc | ad-mci | mci-nc | 3way (default ad-nc)");
  add_str(split, cli, "data_dir", "volume directory (default <out>/data)");

  CLI::App* pretrain = make("pretrain", "pretrain the conv stack on the synthetic source task");
  add_str(pretrain, cli, "preset", "paper | desk (default desk)");
  add_count(pretrain, cli, "pretrain_epochs", "source-task epochs");
  add_count(pretrain, cli, "pretrain_images", "source-task training images");

  CLI::App* train = make("train", "cross-validated training");
  model_opts(train);
  train_opts(train);
  add_str(train, cli, "pretrained", "checkpoint whose conv weights initialize each fold");

  CLI::App* eval = make("eval", "evaluate fold checkpoints on their test folds");
  model_opts(eval);
  add_flag(eval, cli, "subject_vote", "majority vote per subject");

  CLI::App* cam = make("cam", "class activation maps for test slices of each fold");
  model_opts(cam);
  add_count(cam, cli, "cam_limit", "maps per fold (default 4)");
  add_flag(cam, cli, "ground_truth", "map the true class instead of the predicted one");

  std::string csv, column;
  CLI::App* trend = app.add_subcommand("trend", "Mann-Kendall trend test over a CSV column");
  trend->add_option("csv", csv, "CSV file with a header row")->required();
  trend->add_option("--column", column, "column name (default: first column)");

  std::vector<std::string> curve_files;
  std::string mean_out;
  CLI::App* curves = app.add_subcommand("curves", "summarize learning-curve CSVs");
  curves->add_option("files", curve_files, "curve CSVs (epoch,train_loss,val_loss)")->required();
  curves->add_option("--mean", mean_out, "write the epoch-wise mean curve here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (trend->parsed()) return cmd_trend(csv, column);
    if (curves->parsed()) return cmd_curves(curve_files, mean_out);
    const std::vector<std::pair<CLI::App*, int (*)(const json&)>> table = {
        {synth, cmd_synth}, {select, cmd_select}, {split, cmd_split}, {pretrain, cmd_pretrain},
        {train, cmd_train}, {eval, cmd_eval},     {cam, cmd_cam}};
    for (const auto& [sub, fn] : table) {
      if (!sub->parsed()) continue;
      json cfg = merged_config(cli, sub);
      const fs::path out = output_dir(cfg);
      cfg["out_dir"] = out.string();
      fs::create_directories(out);
      return fn(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 1;
}
