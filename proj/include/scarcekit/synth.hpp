#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "scarcekit/dataset.hpp"

namespace sk {

using Proportions = std::array<double, kNumGrades>;

/// Class shares of the DR grading training set (329/212/70 of 611).
inline constexpr Proportions kGradingProportions{329.0 / 611.0, 212.0 / 611.0, 70.0 / 611.0};
/// Class shares of the image quality training set (50/97/518 of 665).
inline constexpr Proportions kQualityProportions{50.0 / 665.0, 97.0 / 665.0, 518.0 / 665.0};

/// Largest-remainder apportionment of n items; ties go to the lower class.
std::array<std::size_t, kNumGrades> apportion(std::size_t n, const Proportions& p);

/// Rows x cols grid used to view a feature vector as an image (flip TTA).
/// rows is the largest divisor of dim not exceeding sqrt(dim).
struct FeatureGrid {
  int rows = 1;
  int cols = 1;
};
FeatureGrid feature_grid(std::size_t dim);

struct OrdinalSpec {
  std::size_t n = 611;
  Proportions proportions = kGradingProportions;
  double noise = 1.0;
  std::size_t dim = 8;
  double separation = 1.0;  // distance between consecutive class centers
  std::uint64_t seed = 0;
  Task task = Task::kGrading;
};

/// Class centers c_k = k * separation * u for a unit direction u that is
/// symmetric under horizontal and vertical flips of the feature grid.
std::array<std::vector<double>, kNumGrades> ordinal_class_centers(const OrdinalSpec& spec);

/// Gaussian clusters around colinear class centers; labels apportioned by
/// largest remainder and shuffled.
TabularDataset gen_ordinal_dataset(const OrdinalSpec& spec);

struct SegSpec {
  std::size_t n = 50;
  int size = 64;
  std::uint64_t seed = 0;
  double artifact_fraction = 0.2;
  double np_probability = 0.9;
  double irma_probability = 0.8;
  double nv_probability = 0.4;
};

/// Synthetic angiography-like images: large dark NP regions built from
/// disks of radius 6-14, small IRMA (mid-bright) and NV (bright) dots of
/// radius 1-3, and lesion-free images carrying bright stripe artifacts.
SegDataset gen_seg_dataset(const SegSpec& spec);

}  // namespace sk
