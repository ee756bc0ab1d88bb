#include "ftbrain/folds.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

std::vector<std::string> FoldPlan::test_subjects(std::size_t fold) const { return folds.at(fold); }

std::vector<std::string> FoldPlan::train_subjects(std::size_t fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (i == fold) continue;
    out.insert(out.end(), folds[i].begin(), folds[i].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan kfold_subject_split(std::vector<SubjectEntry> subjects, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("dataio", "k-fold split needs k >= 2");
  std::map<int, std::vector<std::string>> by_class;
  std::set<std::string> seen;
  for (auto& s : subjects) {
    if (!seen.insert(s.subject_id).second) {
      throw InvalidArgument("dataio", "duplicate subject id '" + s.subject_id + "'");
    }
    by_class[static_cast<int>(s.label)].push_back(std::move(s.subject_id));
  }
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  for (auto& [cls, ids] : by_class) {
    if (ids.size() < k) {
      throw InvalidArgument("dataio", "class " + std::string(label_name(static_cast<Label>(cls))) +
                                          " has " + std::to_string(ids.size()) +
                                          " subjects, fewer than k=" + std::to_string(k));
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls) + 101));
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size(); ++i) plan.folds[i % k].push_back(ids[i]);
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  check_disjoint(plan);
  return plan;
}

void check_disjoint(const FoldPlan& plan) {
  std::set<std::string> seen;
  for (const auto& f : plan.folds) {
    for (const auto& id : f) {
      if (!seen.insert(id).second) {
        throw Error("dataio", "subject '" + id + "' appears in more than one fold");
      }
    }
  }
}

void check_disjoint(const std::vector<std::string>& train, const std::vector<std::string>& test) {
  const std::set<std::string> tr(train.begin(), train.end());
  for (const auto& id : test) {
    if (tr.count(id)) throw Error("dataio", "subject '" + id + "' is on both sides of a split");
  }
}

}  // namespace ftbrain
