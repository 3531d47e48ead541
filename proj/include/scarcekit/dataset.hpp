#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scarcekit/raster.hpp"

namespace sk {

inline constexpr int kNumGrades = 3;

enum class Task { kSegmentation, kQuality, kGrading };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

/// Ordinal grade in {0,1,2}; used for both image quality and DR grade.
class OrdinalLabel {
 public:
  constexpr OrdinalLabel() = default;
  explicit OrdinalLabel(int value);
  constexpr int value() const noexcept { return value_; }
  auto operator<=>(const OrdinalLabel&) const = default;

 private:
  int value_ = 0;
};

struct TabularSample {
  std::int64_t id = 0;
  std::vector<double> features;
  std::optional<OrdinalLabel> label;

  bool operator==(const TabularSample&) const = default;
};

/// Feature-vector dataset for the quality and grading tasks.
struct TabularDataset {
  Task task = Task::kGrading;
  std::size_t dim = 0;
  std::vector<TabularSample> samples;

  /// Throws InputError on duplicate ids, mixed dimensions or non-finite
  /// features.
  void validate() const;
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::array<std::size_t, kNumGrades> label_counts() const;
  /// Copy with every label removed.
  TabularDataset unlabeled() const;

  bool operator==(const TabularDataset&) const = default;
};

struct SegSample {
  std::int64_t id = 0;
  Image image;
  std::optional<MaskSet> masks;

  bool operator==(const SegSample&) const = default;
};

struct SegDataset {
  std::vector<SegSample> samples;

  void validate() const;
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  bool operator==(const SegDataset&) const = default;
};

/// raw/255 elementwise. Throws InputError for values outside [0,255].
Image normalize_image(const Raster<int>& raw);

/// Stratified (when labels exist) seeded split into (train, dev). Output
/// datasets keep the input order. Classes with fewer than 2 samples are a
/// stratification error.
std::pair<TabularDataset, TabularDataset> split_train_dev(const TabularDataset& d, double ratio,
                                                          std::uint64_t seed);
std::pair<SegDataset, SegDataset> split_train_dev(const SegDataset& d, double ratio,
                                                  std::uint64_t seed);

/// Per-class train counts used by the stratified split: floor of ratio *
/// count, then the remainder up to round(ratio * total) handed out one per
/// class in index order.
std::vector<std::size_t> stratified_train_counts(const std::vector<std::size_t>& class_sizes,
                                                 double ratio);

}  // namespace sk
