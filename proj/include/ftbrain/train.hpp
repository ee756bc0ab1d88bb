#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftbrain/checkpoint.hpp"
#include "ftbrain/dataset.hpp"
#include "ftbrain/folds.hpp"
#include "ftbrain/model.hpp"

namespace ftbrain {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 25;
  double lr = 1e-6;
  std::uint64_t seed = 0;
  FreezeGroup freeze_group = FreezeGroup::All;
  std::size_t images_per_subject = 8;
  SelectionMode selection = SelectionMode::Entropy;
  std::size_t k_folds = 5;

  // 100 epochs, batch 25, Adam lr 1e-6.
  static TrainConfig paper();
  // Desk-scale schedule for the narrow desk model.
  static TrainConfig desk();

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep the defaults of `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct LearningCurve {
  // Training-set loss before the first update.
  double initial_train_loss = 0.0;
  std::vector<CurvePoint> points;
};

// Trains the model's trainable parameters with Adam on mean cross-entropy.
// The freeze group in `cfg` is applied first. Batches are reshuffled every
// epoch from a seed derived from cfg.seed. The frozen leading stages are run
// once per sample and their activations reused. `val` may be empty, in
// which case val_loss is recorded as NaN. Throws NumericError on a
// non-finite loss.
LearningCurve train(Model& model, const SampleSet& train_set, const SampleSet& val_set,
                    const TrainConfig& cfg);

// Mean loss and probabilities over a sample set, in batches.
double mean_loss(const Model& model, const SampleSet& set);

struct FoldReport {
  std::size_t fold = 0;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  double accuracy = 0.0;
  // Binary tasks only (positive class = target 1); NaN for 3-way.
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::size_t test_size = 0;
};

// Rates from a confusion matrix. For 2x2 matrices: sens = TP/(TP+FN),
// spec = TN/(TN+FP); larger matrices report accuracy only.
FoldReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);

// Per-slice classification (sigmoid >= 0.5 is positive; 3-way takes the
// first maximal class). With subject_vote, each subject contributes one
// decision: the majority of its slice predictions (ties go to the positive
// or lowest class index).
FoldReport evaluate(const Model& model, const SampleSet& test_set, bool subject_vote = false);

struct EvalReport {
  std::vector<FoldReport> folds;
  double mean_accuracy = 0.0;
  // Sample standard deviation (n-1) of fold accuracies; 0 for a single fold.
  double std_accuracy = 0.0;
};

EvalReport aggregate(std::vector<FoldReport> folds);

// How each fold's model starts: from scratch, or with conv weights copied
// from a pretrained checkpoint (the head is always freshly initialized).
struct ModelInit {
  ModelSpec spec;
  std::optional<Checkpoint> pretrained;
};

struct FoldOutcome {
  FoldReport report;
  LearningCurve curve;
  Checkpoint checkpoint;
};

// Receives the subject ids present in each fold's train and test samples
// just before training. Calls are serialized; pass {} to remove.
using FoldObserver = std::function<void(std::size_t fold, const std::vector<std::string>& train_subjects,
                                        const std::vector<std::string>& test_subjects)>;
void set_fold_observer(FoldObserver observer);

// Trains on every fold except `fold` and evaluates on `fold`, with fold seed
// cfg.seed + fold. Re-checks subject disjointness before training.
FoldOutcome run_fold(const SampleSet& data, const FoldPlan& plan, std::size_t fold,
                     const TrainConfig& cfg, const ModelInit& init, bool subject_vote = false);

// All folds of `plan`. With jobs > 1 folds run on separate threads; results
// do not depend on the job count.
struct CrossValidation {
  EvalReport report;
  std::vector<FoldOutcome> folds;
};
CrossValidation cross_validate(const SampleSet& data, const FoldPlan& plan, const TrainConfig& cfg,
                               const ModelInit& init, std::size_t jobs = 1, bool subject_vote = false);

// CSV `epoch,train_loss,val_loss`, nine significant digits.
void export_curves(const LearningCurve& curve, const std::filesystem::path& path);
LearningCurve read_curves(const std::filesystem::path& path);

// Run report: CSV `fold,acc,sens,spec` and a JSON summary.
void write_fold_report_csv(const EvalReport& report, const std::filesystem::path& path);
nlohmann::json report_summary(const EvalReport& report, const TrainConfig& cfg);

}  // namespace ftbrain
