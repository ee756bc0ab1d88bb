#include "ftbrain/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "ftbrain/adam.hpp"
#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 12;
  c.lr = 3e-4;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train", "epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("train", "batch_size must be >= 1");
  if (k_folds < 2) throw InvalidArgument("train", "k_folds must be >= 2");
  if (images_per_subject < 1) throw InvalidArgument("train", "images_per_subject must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("train", "lr must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"seed", seed},
          {"freeze_group", std::string(freeze_group_name(freeze_group))},
          {"images_per_subject", images_per_subject},
          {"selection_mode", std::string(selection_mode_name(selection))},
          {"k_folds", k_folds}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw InvalidArgument("train", "train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "freeze_group") c.freeze_group = parse_freeze_group(value.get<std::string>());
      else if (key == "images_per_subject") c.images_per_subject = value.get<std::size_t>();
      else if (key == "selection_mode") c.selection = parse_selection_mode(value.get<std::string>());
      else if (key == "k_folds") c.k_folds = value.get<std::size_t>();
      else throw InvalidArgument("train", "unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("train", std::string("bad train config value: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

constexpr std::size_t kInferenceChunk = 32;

// A sample set seen through the model's frozen leading stages.
struct StagedSet {
  const SampleSet* view = nullptr;
  std::unique_ptr<SampleSet> owned;
  const SampleSet& get() const { return *view; }
};

StagedSet stage_inputs(const Model& model, const SampleSet& set, std::size_t prefix) {
  StagedSet staged;
  if (prefix == 0 || set.size() == 0) {
    staged.view = &set;
    return staged;
  }
  staged.owned = std::make_unique<SampleSet>();
  SampleSet& out = *staged.owned;
  for (std::size_t b = 0; b < set.size(); b += kInferenceChunk) {
    const std::size_t e = std::min(set.size(), b + kInferenceChunk);
    const Tensor act = model.forward_stages(set.batch(b, e), 0, prefix);
    if (out.sample_shape.empty()) out.sample_shape = Shape(act.shape().begin() + 1, act.shape().end());
    out.data.insert(out.data.end(), act.storage().begin(), act.storage().end());
  }
  out.targets = set.targets;
  out.subjects = set.subjects;
  staged.view = staged.owned.get();
  return staged;
}

double mean_loss_from(const Model& model, const SampleSet& set, std::size_t begin) {
  if (set.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t b = 0; b < set.size(); b += kInferenceChunk) {
    const std::size_t e = std::min(set.size(), b + kInferenceChunk);
    const Tensor prob = model.predict(set.batch(b, e), begin);
    const std::span<const int> labels(set.targets.data() + b, e - b);
    total += model.loss(prob, labels) * static_cast<double>(e - b);
  }
  return total / static_cast<double>(set.size());
}

}  // namespace

double mean_loss(const Model& model, const SampleSet& set) { return mean_loss_from(model, set, 0); }

LearningCurve train(Model& model, const SampleSet& train_set, const SampleSet& val_set,
                    const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) throw InvalidArgument("train", "empty training set");
  check_disjoint(train_set.subject_ids(), val_set.subject_ids());

  model.apply_freeze(cfg.freeze_group);
  const std::size_t prefix = model.frozen_stage_prefix();
  const StagedSet tr = stage_inputs(model, train_set, prefix);
  const StagedSet va = stage_inputs(model, val_set, prefix);

  std::vector<std::size_t> trainable;
  std::vector<AdamState> states;
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const Parameter& p = model.parameters()[i];
    if (!p.trainable) continue;
    trainable.push_back(i);
    states.emplace_back(p.value.shape(), adam);
  }

  LearningCurve curve;
  curve.initial_train_loss = mean_loss_from(model, tr.get(), prefix);
  if (!std::isfinite(curve.initial_train_loss)) {
    throw NumericError("train", "non-finite initial training loss");
  }

  Rng rng(derive_seed(cfg.seed, 0x7a11));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double running = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + b, e - b);
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = tr.get().targets[idx[i]];

      model.zero_grad();
      const double loss = model.accumulate_gradients(tr.get().batch(idx), prefix, labels);
      if (!std::isfinite(loss)) {
        throw NumericError("train", "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(b / cfg.batch_size));
      }
      running += loss * static_cast<double>(idx.size());
      for (std::size_t k = 0; k < trainable.size(); ++k) {
        Parameter& p = model.parameters()[trainable[k]];
        require_finite(p.grad, p.name.c_str());
        adam_step(p.value, p.grad, states[k]);
      }
    }
    CurvePoint pt;
    pt.epoch = epoch;
    pt.train_loss = running / static_cast<double>(order.size());
    pt.val_loss = mean_loss_from(model, va.get(), prefix);
    curve.points.push_back(pt);
  }
  return curve;
}

FoldReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  FoldReport r;
  const std::size_t k = confusion.size();
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) throw InvalidArgument("train", "confusion matrix must be square");
    for (std::size_t j = 0; j < k; ++j) total += confusion[i][j];
    correct += confusion[i][i];
  }
  if (total == 0) throw InvalidArgument("train", "empty test set");
  r.test_size = total;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  if (k == 2) {
    const double tp = static_cast<double>(confusion[1][1]), fn = static_cast<double>(confusion[1][0]);
    const double tn = static_cast<double>(confusion[0][0]), fp = static_cast<double>(confusion[0][1]);
    r.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
  } else {
    r.sensitivity = r.specificity = std::numeric_limits<double>::quiet_NaN();
  }
  r.confusion = std::move(confusion);
  return r;
}

FoldReport evaluate(const Model& model, const SampleSet& test_set, bool subject_vote) {
  if (test_set.size() == 0) throw InvalidArgument("train", "empty test set");
  const bool binary = model.spec().head == HeadKind::SigmoidBinary;
  const std::size_t classes = binary ? 2 : 3;

  std::vector<int> pred(test_set.size());
  for (std::size_t b = 0; b < test_set.size(); b += kInferenceChunk) {
    const std::size_t e = std::min(test_set.size(), b + kInferenceChunk);
    const Tensor prob = model.predict(test_set.batch(b, e));
    for (std::size_t i = b; i < e; ++i) {
      if (binary) {
        pred[i] = prob[i - b] >= 0.5f ? 1 : 0;
      } else {
        const float* row = prob.data() + (i - b) * classes;
        pred[i] = static_cast<int>(std::max_element(row, row + classes) - row);
      }
    }
  }

  std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
  if (!subject_vote) {
    for (std::size_t i = 0; i < pred.size(); ++i) ++confusion[test_set.targets[i]][pred[i]];
  } else {
    std::map<std::string, std::pair<int, std::vector<std::size_t>>> votes;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      auto& [target, counts] = votes[test_set.subjects[i]];
      target = test_set.targets[i];
      counts.resize(classes, 0);
      ++counts[pred[i]];
    }
    for (const auto& [id, tv] : votes) {
      const auto& counts = tv.second;
      std::size_t decision;
      if (binary) {
        decision = counts[1] >= counts[0] ? 1 : 0;
      } else {
        decision = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      }
      ++confusion[tv.first][decision];
    }
  }
  return metrics_from_confusion(std::move(confusion));
}

EvalReport aggregate(std::vector<FoldReport> folds) {
  EvalReport r;
  r.folds = std::move(folds);
  if (r.folds.empty()) return r;
  double sum = 0.0;
  for (const auto& f : r.folds) sum += f.accuracy;
  const double n = static_cast<double>(r.folds.size());
  r.mean_accuracy = sum / n;
  if (r.folds.size() > 1) {
    double ss = 0.0;
    for (const auto& f : r.folds) ss += (f.accuracy - r.mean_accuracy) * (f.accuracy - r.mean_accuracy);
    r.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

namespace {
std::mutex g_observer_mutex;
FoldObserver g_observer;
}  // namespace

void set_fold_observer(FoldObserver observer) {
  std::lock_guard lock(g_observer_mutex);
  g_observer = std::move(observer);
}

FoldOutcome run_fold(const SampleSet& data, const FoldPlan& plan, std::size_t fold,
                     const TrainConfig& cfg, const ModelInit& init, bool subject_vote) {
  if (fold >= plan.folds.size()) throw InvalidArgument("train", "fold index out of range");
  const auto train_ids = plan.train_subjects(fold);
  const auto test_ids = plan.test_subjects(fold);
  check_disjoint(train_ids, test_ids);
  const SampleSet tr = data.restrict_to(train_ids);
  const SampleSet te = data.restrict_to(test_ids);
  check_disjoint(tr.subject_ids(), te.subject_ids());
  {
    std::lock_guard lock(g_observer_mutex);
    if (g_observer) g_observer(fold, tr.subject_ids(), te.subject_ids());
  }

  TrainConfig fold_cfg = cfg;
  fold_cfg.seed = cfg.seed + fold;
  Model model(init.spec, fold_cfg.seed);
  if (init.pretrained) transfer_conv_weights(*init.pretrained, model);

  FoldOutcome out;
  try {
    out.curve = train(model, tr, te, fold_cfg);
    out.report = evaluate(model, te, subject_vote);
  } catch (const Error& e) {
    throw Error("train", "fold " + std::to_string(fold) + " failed: " + e.what());
  }
  out.report.fold = fold;
  out.checkpoint = make_checkpoint(model, cfg.epochs);
  return out;
}

CrossValidation cross_validate(const SampleSet& data, const FoldPlan& plan, const TrainConfig& cfg,
                               const ModelInit& init, std::size_t jobs, bool subject_vote) {
  check_disjoint(plan);
  const std::size_t k = plan.folds.size();
  std::vector<std::optional<FoldOutcome>> outcomes(k);
  std::vector<std::exception_ptr> errors(k);
  auto work = [&](std::size_t f) {
    try {
      outcomes[f] = run_fold(data, plan, f, cfg, init, subject_vote);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, k));
  if (jobs == 1) {
    for (std::size_t f = 0; f < k; ++f) work(f);
  } else {
    for (std::size_t start = 0; start < k; start += jobs) {
      std::vector<std::thread> pool;
      for (std::size_t f = start; f < std::min(k, start + jobs); ++f) pool.emplace_back(work, f);
      for (auto& t : pool) t.join();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  CrossValidation cv;
  std::vector<FoldReport> reports;
  for (auto& o : outcomes) {
    reports.push_back(o->report);
    cv.folds.push_back(std::move(*o));
  }
  cv.report = aggregate(std::move(reports));
  return cv;
}

void export_curves(const LearningCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("train", "cannot open " + path.string() + " for writing");
  out << "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", p.epoch, p.train_loss, p.val_loss);
    out << buf;
  }
  if (!out) throw Error("train", "write failed for " + path.string());
}

LearningCurve read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("train", "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss") throw FormatError("train", path.string() + ": bad curve header");
  LearningCurve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("train", path.string() + ": expected 3 fields");
    try {
      c.points.push_back({std::stoul(f[0]), std::stod(f[1]), std::stod(f[2])});
    } catch (const std::logic_error&) {
      throw FormatError("train", path.string() + ": bad numeric field");
    }
  }
  return c;
}

void write_fold_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("train", "cannot open " + path.string() + " for writing");
  out << "fold,acc,sens,spec\n";
  char buf[128];
  for (const auto& f : report.folds) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", f.fold, f.accuracy, f.sensitivity, f.specificity);
    out << buf;
  }
}

nlohmann::json report_summary(const EvalReport& report, const TrainConfig& cfg) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    nlohmann::json jf = {{"fold", f.fold}, {"acc", f.accuracy}, {"test_size", f.test_size},
                         {"confusion", f.confusion}};
    if (f.confusion.size() == 2) {
      jf["sens"] = f.sensitivity;
      jf["spec"] = f.specificity;
    }
    folds.push_back(std::move(jf));
  }
  return {{"mean_acc", report.mean_accuracy},
          {"std_acc", report.std_accuracy},
          {"config", cfg.to_json()},
          {"seed", cfg.seed},
          {"folds", std::move(folds)}};
}

}  // namespace ftbrain
