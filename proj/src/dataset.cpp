#include "ftbrain/dataset.hpp"

#include <algorithm>
#include <set>

#include "ftbrain/entropy.hpp"
#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

std::string_view selection_mode_name(SelectionMode m) {
  return m == SelectionMode::Entropy ? "entropy" : "random";
}

SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "entropy") return SelectionMode::Entropy;
  if (s == "random") return SelectionMode::Random;
  throw InvalidArgument("train", "unknown selection mode '" + std::string(s) + "'");
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::AdNc: return "ad-nc";
    case Task::AdMci: return "ad-mci";
    case Task::MciNc: return "mci-nc";
    case Task::ThreeWay: return "3way";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "ad-nc") return Task::AdNc;
  if (s == "ad-mci") return Task::AdMci;
  if (s == "mci-nc") return Task::MciNc;
  if (s == "3way") return Task::ThreeWay;
  throw InvalidArgument("train", "unknown task '" + std::string(s) + "'");
}

HeadKind task_head(Task t) { return t == Task::ThreeWay ? HeadKind::Softmax3 : HeadKind::SigmoidBinary; }

int task_target(Task t, Label l) {
  switch (t) {
    case Task::AdNc: return l == Label::AD ? 1 : l == Label::NC ? 0 : -1;
    case Task::AdMci: return l == Label::AD ? 1 : l == Label::MCI ? 0 : -1;
    case Task::MciNc: return l == Label::MCI ? 1 : l == Label::NC ? 0 : -1;
    case Task::ThreeWay: return static_cast<int>(l);
  }
  return -1;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<ManifestRow> select_slices(const Volume& v, std::size_t k, SelectionMode mode,
                                       std::uint64_t seed, const std::string& path) {
  std::vector<SliceRecord> slices = extract_axial(v);
  for (auto& s : slices) normalize(s);
  const EntropyRanking ranking = rank_slices(slices);

  std::vector<std::size_t> chosen;
  if (mode == SelectionMode::Entropy) {
    chosen = select_top_k(ranking, k);
  } else {
    chosen = select_random_k(slices.size(), k, derive_seed(seed, fnv1a(v.subject_id)));
  }
  std::vector<double> entropy(slices.size());
  for (const auto& e : ranking.entries) entropy[e.slice_index] = e.entropy_bits;

  std::vector<ManifestRow> rows;
  rows.reserve(chosen.size());
  for (std::size_t z : chosen) rows.push_back(ManifestRow{v.subject_id, v.label, z, entropy[z], path});
  return rows;
}

Image preprocess_slice(const Volume& v, std::size_t z, std::size_t out_h, std::size_t out_w) {
  Image img = normalize(v.plane(z), v.type());
  if (img.height == out_h && img.width == out_w) return img;
  return resize_bilinear(img, out_h, out_w);
}

void VolumeCache::put(const std::string& path, Volume v) { volumes_[path] = std::move(v); }

const Volume& VolumeCache::get(const ManifestRow& row) {
  auto it = volumes_.find(row.path);
  if (it == volumes_.end()) {
    it = volumes_.emplace(row.path, load_volume(row.path, row.subject_id, row.label)).first;
  }
  return it->second;
}

void SampleSet::append(std::span<const float> sample, int target, std::string subject) {
  if (sample.size() != sample_size()) throw InvalidArgument("train", "sample size mismatch");
  data.insert(data.end(), sample.begin(), sample.end());
  targets.push_back(target);
  subjects.push_back(std::move(subject));
}

Tensor SampleSet::batch(std::span<const std::size_t> indices) const {
  Shape shape{indices.size()};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  Tensor t(shape);
  const std::size_t n = sample_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(indices[i] * n), n, t.data() + i * n);
  }
  return t;
}

Tensor SampleSet::batch(std::size_t begin, std::size_t end) const {
  Shape shape{end - begin};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  const std::size_t n = sample_size();
  return Tensor(shape, std::vector<float>(data.begin() + static_cast<std::ptrdiff_t>(begin * n),
                                          data.begin() + static_cast<std::ptrdiff_t>(end * n)));
}

SampleSet SampleSet::restrict_to(const std::vector<std::string>& ids) const {
  const std::set<std::string> keep(ids.begin(), ids.end());
  SampleSet out;
  out.sample_shape = sample_shape;
  const std::size_t n = sample_size();
  for (std::size_t i = 0; i < size(); ++i) {
    if (!keep.count(subjects[i])) continue;
    out.append(std::span<const float>(data.data() + i * n, n), targets[i], subjects[i]);
  }
  return out;
}

std::vector<std::string> SampleSet::subject_ids() const {
  std::vector<std::string> ids = subjects;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

SampleSet build_samples(std::span<const ManifestRow> rows, Task task, const ModelSpec& spec,
                        VolumeCache& volumes) {
  SampleSet out;
  out.sample_shape = {spec.channels, spec.height, spec.width};
  std::vector<float> sample(out.sample_size());
  const std::size_t plane = spec.height * spec.width;
  for (const auto& row : rows) {
    const int target = task_target(task, row.label);
    if (target < 0) continue;
    const Volume& v = volumes.get(row);
    if (row.slice_index >= v.dims.z) {
      throw InvalidArgument("train", "slice " + std::to_string(row.slice_index) + " out of range for " +
                                         row.subject_id);
    }
    const Image img = preprocess_slice(v, row.slice_index, spec.height, spec.width);
    for (std::size_t c = 0; c < spec.channels; ++c) {
      std::copy(img.pixels.begin(), img.pixels.end(), sample.begin() + static_cast<std::ptrdiff_t>(c * plane));
    }
    out.append(sample, target, row.subject_id);
  }
  return out;
}

}  // namespace ftbrain
