#include "scarcekit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "scarcekit/random.hpp"

namespace sk {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::kSegmentation: return "segmentation";
    case Task::kQuality: return "quality";
    case Task::kGrading: return "grading";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "segmentation" || s == "seg") return Task::kSegmentation;
  if (s == "quality") return Task::kQuality;
  if (s == "grading") return Task::kGrading;
  throw InputError("unknown task '" + std::string(s) + "'");
}

OrdinalLabel::OrdinalLabel(int value) : value_(value) {
  if (value < 0 || value >= kNumGrades)
    throw InputError("ordinal label " + std::to_string(value) + " outside {0,1,2}");
}

void TabularDataset::validate() const {
  std::unordered_set<std::int64_t> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw InputError("duplicate sample id " + std::to_string(s.id));
    if (s.features.size() != dim)
      throw InputError("sample " + std::to_string(s.id) + " has wrong feature dimension");
    for (double v : s.features)
      if (!std::isfinite(v)) throw InputError("non-finite feature in sample " + std::to_string(s.id));
  }
}

std::array<std::size_t, kNumGrades> TabularDataset::label_counts() const {
  std::array<std::size_t, kNumGrades> counts{};
  for (const auto& s : samples)
    if (s.label) ++counts[s.label->value()];
  return counts;
}

TabularDataset TabularDataset::unlabeled() const {
  TabularDataset out = *this;
  for (auto& s : out.samples) s.label.reset();
  return out;
}

void SegDataset::validate() const {
  std::unordered_set<std::int64_t> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw InputError("duplicate sample id " + std::to_string(s.id));
    if (s.masks && (s.masks->width() != s.image.width() || s.masks->height() != s.image.height()))
      throw InputError("mask/image shape mismatch in sample " + std::to_string(s.id));
    if (!samples.empty() && (s.image.width() != samples.front().image.width() ||
                             s.image.height() != samples.front().image.height()))
      throw InputError("segmentation images differ in shape");
  }
}

Image normalize_image(const Raster<int>& raw) {
  Plane out(raw.width(), raw.height());
  auto src = raw.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] < 0 || src[i] > 255)
      throw InputError("raw pixel " + std::to_string(src[i]) + " outside [0,255]");
    dst[i] = src[i] / 255.0;
  }
  return Image(std::move(out));
}

std::vector<std::size_t> stratified_train_counts(const std::vector<std::size_t>& class_sizes,
                                                 double ratio) {
  const std::size_t total = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  std::vector<std::size_t> train(class_sizes.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < class_sizes.size(); ++k) {
    train[k] = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(class_sizes[k])));
    assigned += train[k];
  }
  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
  while (assigned < target) {
    bool progressed = false;
    for (std::size_t k = 0; k < class_sizes.size() && assigned < target; ++k) {
      if (train[k] < class_sizes[k]) {
        ++train[k];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return train;
}

namespace {

// Returns a train-membership flag per sample index.
std::vector<bool> stratified_membership(const std::vector<int>& groups, int num_groups,
                                        double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split ratio must lie in (0,1)");
  std::vector<std::vector<std::size_t>> members(num_groups);
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::vector<std::size_t> sizes;
  for (const auto& m : members) sizes.push_back(m.size());
  if (num_groups > 1)
    for (std::size_t k = 0; k < sizes.size(); ++k)
      if (sizes[k] < 2)
        throw InputError("stratified split: class " + std::to_string(k) + " has fewer than 2 samples");
  const auto train_counts = stratified_train_counts(sizes, ratio);

  Rng rng(seed);
  std::vector<bool> in_train(groups.size(), false);
  for (int k = 0; k < num_groups; ++k) {
    auto idx = members[k];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < train_counts[k]; ++j) in_train[idx[j]] = true;
  }
  return in_train;
}

}  // namespace

std::pair<TabularDataset, TabularDataset> split_train_dev(const TabularDataset& d, double ratio,
                                                          std::uint64_t seed) {
  const bool labeled = std::all_of(d.samples.begin(), d.samples.end(),
                                   [](const auto& s) { return s.label.has_value(); });
  std::vector<int> groups;
  groups.reserve(d.size());
  for (const auto& s : d.samples) groups.push_back(labeled ? s.label->value() : 0);
  const auto in_train = stratified_membership(groups, labeled ? kNumGrades : 1, ratio, seed);

  TabularDataset train{d.task, d.dim, {}}, dev{d.task, d.dim, {}};
  for (std::size_t i = 0; i < d.size(); ++i)
    (in_train[i] ? train : dev).samples.push_back(d.samples[i]);
  return {std::move(train), std::move(dev)};
}

std::pair<SegDataset, SegDataset> split_train_dev(const SegDataset& d, double ratio,
                                                  std::uint64_t seed) {
  const auto in_train = stratified_membership(std::vector<int>(d.size(), 0), 1, ratio, seed);
  SegDataset train, dev;
  for (std::size_t i = 0; i < d.size(); ++i)
    (in_train[i] ? train : dev).samples.push_back(d.samples[i]);
  return {std::move(train), std::move(dev)};
}

}  // namespace sk
