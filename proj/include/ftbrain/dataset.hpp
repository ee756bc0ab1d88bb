#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftbrain/manifest.hpp"
#include "ftbrain/model.hpp"
#include "ftbrain/volume.hpp"

namespace ftbrain {

enum class SelectionMode { Entropy, Random };
std::string_view selection_mode_name(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view s);

// Classification problems: three pairwise tasks and the 3-way task.
enum class Task { AdNc, AdMci, MciNc, ThreeWay };
std::string_view task_name(Task t);
Task parse_task(std::string_view s);
HeadKind task_head(Task t);
// Training target of a label: 1 for the positive class (AD for ad-nc and
// ad-mci, MCI for mci-nc), 0 for the other class, the class index for 3-way
// (AD=0, MCI=1, NC=2), or -1 when the label is not part of the task.
int task_target(Task t, Label l);

// Picks `k` slices of a volume and returns manifest rows (with entropies)
// pointing at `path`. Entropy mode keeps the top-k by entropy; random mode
// draws k distinct slices with a seed derived from (seed, subject id).
std::vector<ManifestRow> select_slices(const Volume& v, std::size_t k, SelectionMode mode,
                                       std::uint64_t seed, const std::string& path);

// Network input for one slice: normalized to [0,1] and resized.
Image preprocess_slice(const Volume& v, std::size_t z, std::size_t out_h, std::size_t out_w);

// Volumes keyed by path; loads MVOL files on first use.
class VolumeCache {
 public:
  void put(const std::string& path, Volume v);
  const Volume& get(const ManifestRow& row);

 private:
  std::map<std::string, Volume> volumes_;
};

// Contiguous batch of equally shaped samples with task targets and owning
// subject ids.
struct SampleSet {
  Shape sample_shape;
  std::vector<float> data;
  std::vector<int> targets;
  std::vector<std::string> subjects;

  std::size_t size() const { return targets.size(); }
  std::size_t sample_size() const { return shape_size(sample_shape); }
  void append(std::span<const float> sample, int target, std::string subject);
  Tensor batch(std::span<const std::size_t> indices) const;
  Tensor batch(std::size_t begin, std::size_t end) const;
  // Samples whose subject is in `ids` (sorted, unique).
  SampleSet restrict_to(const std::vector<std::string>& ids) const;
  std::vector<std::string> subject_ids() const;
};

// Network inputs for every row whose label takes part in `task`; grayscale
// is replicated when spec.channels > 1.
SampleSet build_samples(std::span<const ManifestRow> rows, Task task, const ModelSpec& spec,
                        VolumeCache& volumes);

}  // namespace ftbrain
