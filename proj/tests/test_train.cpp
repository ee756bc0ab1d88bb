#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ftbrain/error.hpp"
#include "ftbrain/train.hpp"
#include "support/fixtures.hpp"

using namespace ftbrain;
namespace fs = std::filesystem;

namespace {

ModelSpec toy_spec() {
  ModelSpec s;
  s.height = s.width = 16;
  s.blocks = {{1, 4}, {1, 8}};
  s.fc_width = 8;
  return s;
}

TrainConfig toy_cfg(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 10;
  c.lr = 3e-3;
  c.seed = 5;
  return c;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "ftbrain_test_train";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("metrics from a confusion matrix") {
  // confusion[true][predicted]; positive class is index 1.
  const FoldReport r = metrics_from_confusion({{8, 2}, {1, 9}});
  CHECK(r.sensitivity == doctest::Approx(0.90));
  CHECK(r.specificity == doctest::Approx(0.80));
  CHECK(r.accuracy == doctest::Approx(0.85));
  CHECK(r.test_size == 20);

  const FoldReport p = metrics_from_confusion({{5, 0}, {0, 7}});
  CHECK(p.accuracy == 1.0);
  CHECK(p.sensitivity == 1.0);
  CHECK(p.specificity == 1.0);

  const FoldReport three = metrics_from_confusion({{3, 1, 0}, {0, 4, 0}, {1, 0, 1}});
  CHECK(three.accuracy == doctest::Approx(0.8));
  CHECK(std::isnan(three.sensitivity));

  CHECK_THROWS_AS(metrics_from_confusion({{0, 0}, {0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(metrics_from_confusion({{1, 0}, {0}}), InvalidArgument);
}

TEST_CASE("evaluate: a 0.5 output counts as positive") {
  const ModelSpec s = toy_spec();
  Model m(s, 1);
  for (auto& v : m.parameter("out.weight").value.storage()) v = 0.0f;
  for (auto& v : m.parameter("out.bias").value.storage()) v = 0.0f;
  const SampleSet set = fixture::separable_set(3, 2, s, 1);
  const FoldReport r = evaluate(m, set);
  CHECK(r.confusion[0][1] == 6);
  CHECK(r.confusion[1][1] == 6);
  CHECK(r.sensitivity == 1.0);
  CHECK(r.specificity == 0.0);
  CHECK(r.accuracy == 0.5);
  CHECK(evaluate(m, set, true).test_size == 6);
  CHECK_THROWS_AS(evaluate(m, SampleSet{}), InvalidArgument);
}

TEST_CASE("accuracy equals the confusion-matrix value") {
  const ModelSpec s = toy_spec();
  const Model m(s, 7);
  const SampleSet set = fixture::separable_set(4, 3, s, 2);
  const FoldReport r = evaluate(m, set);
  std::size_t total = 0;
  for (const auto& row : r.confusion)
    for (auto c : row) total += c;
  CHECK(total == set.size());
  CHECK(r.accuracy == static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / static_cast<double>(total));
}

TEST_CASE("aggregate uses the mean and the sample standard deviation") {
  std::vector<FoldReport> folds(3);
  folds[0].accuracy = 0.8;
  folds[1].accuracy = 0.9;
  folds[2].accuracy = 1.0;
  const EvalReport r = aggregate(folds);
  CHECK(r.mean_accuracy == doctest::Approx(0.9));
  CHECK(r.std_accuracy == doctest::Approx(0.1));
  CHECK(aggregate({folds[0]}).std_accuracy == 0.0);
}

TEST_CASE("config validation and JSON") {
  TrainConfig c = TrainConfig::paper();
  CHECK(c.epochs == 100);
  CHECK(c.batch_size == 25);
  CHECK(c.lr == 1e-6);
  CHECK(c.k_folds == 5);
  c.freeze_group = FreezeGroup::G3;
  c.selection = SelectionMode::Random;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"epoch", 3}}), InvalidArgument);
  c.k_folds = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("learning curve CSV") {
  LearningCurve c;
  for (std::size_t e = 1; e <= 100; ++e) {
    c.points.push_back({e, static_cast<float>(1.0 / (3.0 + e)), static_cast<float>(std::exp(-0.01 * e) / 7.0)});
  }
  const fs::path p = temp_dir() / "curve.csv";
  export_curves(c, p);
  std::ifstream f(p);
  std::size_t lines = 0;
  for (std::string line; std::getline(f, line);) ++lines;
  CHECK(lines == 101);
  const LearningCurve back = read_curves(p);
  REQUIRE(back.points.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(back.points[i].epoch == c.points[i].epoch);
    CHECK(static_cast<float>(back.points[i].train_loss) == static_cast<float>(c.points[i].train_loss));
    CHECK(static_cast<float>(back.points[i].val_loss) == static_cast<float>(c.points[i].val_loss));
  }
}

TEST_CASE("training converges on a separable set and is deterministic") {
  const ModelSpec s = toy_spec();
  const SampleSet tr = fixture::brightness_set(20, 4, s, 11, "tr");
  const SampleSet va = fixture::brightness_set(6, 4, s, 12, "va");
  TrainConfig cfg = toy_cfg(60);
  cfg.lr = 3e-4;
  Model a(s, 3), b(s, 3);
  const LearningCurve ca = train(a, tr, va, cfg);
  const LearningCurve cb = train(b, tr, va, cfg);
  REQUIRE(ca.points.size() == 60);
  for (std::size_t i = 0; i < ca.points.size(); ++i) {
    CHECK(ca.points[i].train_loss == cb.points[i].train_loss);
    CHECK(ca.points[i].val_loss == cb.points[i].val_loss);
    CHECK(std::isfinite(ca.points[i].train_loss));
  }
  CHECK(ca.points.back().train_loss < 0.1 * ca.initial_train_loss);
  CHECK(ca.points.back().val_loss < 2.0 * ca.points.back().train_loss);
  CHECK(evaluate(a, va).accuracy == 1.0);

  // Square-vs-blank images generalize too.
  const SampleSet sq = fixture::separable_set(20, 4, s, 13, "sq");
  const SampleSet sq_val = fixture::separable_set(6, 4, s, 14, "sqv");
  Model c(s, 4);
  train(c, sq, sq_val, toy_cfg(60));
  CHECK(evaluate(c, sq_val).accuracy >= 0.9);
}

TEST_CASE("training rejects overlapping or empty sets") {
  const ModelSpec s = toy_spec();
  const SampleSet tr = fixture::separable_set(3, 2, s, 1, "x");
  Model m(s, 1);
  CHECK_THROWS_AS(train(m, tr, tr, toy_cfg(1)), Error);
  CHECK_THROWS_AS(train(m, SampleSet{}, tr, toy_cfg(1)), InvalidArgument);
  // Empty validation set is allowed and records NaN.
  const LearningCurve c = train(m, tr, SampleSet{}, toy_cfg(1));
  CHECK(std::isnan(c.points[0].val_loss));
}

TEST_CASE("G4 leaves every conv tensor untouched") {
  const ModelSpec s = ModelSpec::desk();
  const SampleSet tr = fixture::separable_set(3, 2, s, 4, "g");
  Model m(s, 2);
  const Model before = m;
  TrainConfig cfg = toy_cfg(2);
  cfg.freeze_group = FreezeGroup::G4;
  train(m, tr, SampleSet{}, cfg);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const auto& p = m.parameters()[i];
    if (p.name.rfind("conv", 0) == 0) CHECK(p.value == before.parameters()[i].value);
  }
  CHECK_FALSE(m.parameter("out.weight").value == before.parameter("out.weight").value);
}

TEST_CASE("a G4 epoch is faster than an All epoch on the desk preset") {
  const ModelSpec s = ModelSpec::desk();
  const SampleSet tr = fixture::separable_set(5, 4, s, 8, "t");
  auto time_epochs = [&](FreezeGroup g) {
    Model m(s, 1);
    TrainConfig cfg = toy_cfg(3);
    cfg.freeze_group = g;
    const auto t0 = std::chrono::steady_clock::now();
    train(m, tr, SampleSet{}, cfg);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  CHECK(time_epochs(FreezeGroup::G4) < time_epochs(FreezeGroup::All));
}

TEST_CASE("cross-validation over 50+50 subjects trains on 40+40") {
  const ModelSpec s = toy_spec();
  const SampleSet data = fixture::separable_set(50, 1, s, 9);
  std::vector<SubjectEntry> subjects;
  for (const auto& id : data.subject_ids()) {
    subjects.push_back({id, id.find("-1-") != std::string::npos ? Label::AD : Label::NC});
  }
  const FoldPlan plan = kfold_subject_split(subjects, 5, 3);
  std::vector<std::size_t> train_sizes;
  set_fold_observer([&](std::size_t, const std::vector<std::string>& tr, const std::vector<std::string>& te) {
    train_sizes.push_back(tr.size());
    CHECK(te.size() == 20);
  });
  const CrossValidation cv = cross_validate(data, plan, toy_cfg(2), ModelInit{s, std::nullopt});
  set_fold_observer({});
  CHECK(train_sizes == std::vector<std::size_t>(5, 80));
  REQUIRE(cv.report.folds.size() == 5);
  double sum = 0.0;
  for (const auto& f : cv.report.folds) sum += f.accuracy;
  CHECK(cv.report.mean_accuracy == doctest::Approx(sum / 5.0));
  CHECK(cv.folds[0].curve.points.size() == 2);

  const CrossValidation threaded = cross_validate(data, plan, toy_cfg(2), ModelInit{s, std::nullopt}, 3);
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(threaded.folds[f].report.accuracy == cv.folds[f].report.accuracy);
    CHECK(threaded.folds[f].curve.points.back().train_loss == cv.folds[f].curve.points.back().train_loss);
  }
}

TEST_CASE("report files") {
  EvalReport r = aggregate({metrics_from_confusion({{8, 2}, {1, 9}}), metrics_from_confusion({{5, 0}, {0, 5}})});
  const fs::path p = temp_dir() / "folds.csv";
  write_fold_report_csv(r, p);
  std::ifstream f(p);
  std::string header;
  std::getline(f, header);
  CHECK(header == "fold,acc,sens,spec");
  const auto j = report_summary(r, TrainConfig::desk());
  CHECK(j.at("mean_acc").get<double>() == doctest::Approx(0.925));
  CHECK(j.contains("std_acc"));
  CHECK(j.contains("seed"));
}
