#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ftbrain/volume.hpp"

namespace ftbrain {

struct SubjectEntry {
  std::string subject_id;
  Label label = Label::NC;
};

// Subject-disjoint folds. folds[i] is the test side of fold i; the training
// side is every other fold.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::vector<std::string>> folds;

  std::vector<std::string> test_subjects(std::size_t fold) const;
  std::vector<std::string> train_subjects(std::size_t fold) const;
};

// Stratified k-fold over subjects. Within each class, subjects are sorted by
// id, shuffled with a seed derived from (seed, class) and dealt round-robin,
// so per-class fold sizes differ by at most one. Requires k >= 2 and at least
// k subjects in every class present.
FoldPlan kfold_subject_split(std::vector<SubjectEntry> subjects, std::size_t k, std::uint64_t seed);

// Throws if any subject appears in more than one fold or on both sides of a
// split.
void check_disjoint(const FoldPlan& plan);
void check_disjoint(const std::vector<std::string>& train, const std::vector<std::string>& test);

}  // namespace ftbrain
