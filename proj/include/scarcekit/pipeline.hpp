#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scarcekit/config.hpp"
#include "scarcekit/ensemble.hpp"
#include "scarcekit/report.hpp"

namespace sk {

struct TabularPools {
  TabularDataset labeled;
  TabularDataset unlabeled;  // labels removed
  TabularDataset dev;
};

struct SegPools {
  SegDataset train;
  SegDataset dev;
};

Proportions task_proportions(Task task);

/// One synthetic draw of synth.labeled + synth.unlabeled + synth.dev samples,
/// split into the three pools with stratified seeded splits.
TabularPools make_tabular_pools(const RunConfig& cfg, std::uint64_t seed);
SegPools make_seg_pools(const RunConfig& cfg, std::uint64_t seed);

/// Ensemble that holds only the first member of `e`.
Ensemble first_member(const Ensemble& e);

struct TabularInference {
  bool flip_tta = false;
  bool post = false;
  post::GradeDecisionRule rule;
};

struct TabularPrediction {
  std::vector<double> output;  // averaged model output
  int label = 0;
};

/// ensemble averaging -> flip TTA -> class decision. With `post`, a scalar
/// head uses the operating thresholds of `rule` and a softmax head applies
/// them to the expected grade.
TabularPrediction predict_tabular_pipeline(const Ensemble& e, std::span<const double> features,
                                           const TabularInference& inf);

struct SegInference {
  bool rotate_tta = false;
  std::vector<int> rotations{kDefaultRotations.begin(), kDefaultRotations.end()};
  bool mpa_nv = false;
  std::vector<double> mpa_scales{kDefaultMpaScales.begin(), kDefaultMpaScales.end()};
  bool post = false;
  post::SegPostConfig post_cfg;
};

struct SegPrediction {
  SoftMaskSet soft;
  MaskSet masks;
};

/// ensemble averaging -> rotation TTA (and MPA on the NV channel) ->
/// binarization at 0.5 -> reconciliation and NP dilation.
SegPrediction predict_seg_pipeline(const SegSystem& s, const Plane& image, const SegInference& inf);

/// Human-readable pipeline description, e.g. for logs.
std::string describe(const TabularInference& inf, std::size_t members, Head head);
std::string describe(const SegInference& inf, std::size_t np_members);

MetricsReport evaluate_tabular(const Ensemble& e, const TabularDataset& dev, const TabularInference& inf);
MetricsReport evaluate_seg(const SegSystem& s, const SegDataset& dev, const SegInference& inf);

TabularInference tabular_inference(const RunConfig& cfg);
SegInference seg_inference(const RunConfig& cfg);

struct ArmScore {
  std::string arm;
  std::vector<std::pair<std::string, double>> metrics;
};

/// Incremental arms for one seed: baseline, +ensemble, +PL, +RPL, +TTA, +post.
std::vector<ArmScore> ablate_tabular(const TabularPools& pools, const RunConfig& cfg, std::uint64_t seed,
                                     std::ostream* log = nullptr);
/// Incremental arms for one seed: baseline, +ensemble, +TTA, +post.
std::vector<ArmScore> ablate_seg(const SegPools& pools, const RunConfig& cfg, std::uint64_t seed,
                                 std::ostream* log = nullptr);

/// Runs every seed and renders `arm,<metric>_mean,<metric>_std,...,seeds`
/// with sample standard deviations (0 for a single seed).
std::string ablation_table(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                           std::ostream* log = nullptr);

}  // namespace sk
