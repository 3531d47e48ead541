#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "scarcekit/dataset.hpp"
#include "scarcekit/model.hpp"
#include "scarcekit/train.hpp"

namespace sk {

/// K independently trained models whose predictions are averaged.
struct Ensemble {
  std::vector<Mlp> members;
  std::vector<std::uint64_t> seeds;

  Head head() const;
  std::size_t size() const noexcept { return members.size(); }
  /// K >= 1, one seed per member, all members share head and input size.
  void validate() const;
};

/// Order-independent mean: values are sorted and averaged as offsets from the
/// smallest one, so equal inputs give that value back exactly.
double aggregate_mean(std::span<const double> values);

/// Elementwise aggregate_mean of equally sized vectors.
std::vector<double> aggregate_vectors(const std::vector<std::vector<double>>& outputs);

/// Channelwise aggregate_mean of soft masks.
SoftMaskSet aggregate_masks(const std::vector<SoftMaskSet>& masks);

/// Members trained with seeds base_seed + 0 .. K-1 (initialization and
/// shuffling both follow the member seed).
Ensemble train_deep_ensemble(const TabularDataset& data, const TrainConfig& cfg, Head head,
                             const ModelShape& shape, std::size_t k, std::uint64_t base_seed);
Ensemble train_deep_ensemble(const SegDataset& data, const TrainConfig& cfg, std::size_t k,
                             std::uint64_t base_seed, const aug::AugPipeline* aug = nullptr);

/// Two independently trained segmenters: a small-lesion model owning the
/// IRMA and NV channels and an NP model owning the NP channel.
struct SegSystem {
  Ensemble small;
  Ensemble np;
};

struct SegSystemConfig {
  TrainConfig small;  // BCE auxiliary loss over IRMA and NV
  TrainConfig np;     // focal auxiliary loss over NP
  std::size_t small_members = 1;
  std::size_t np_members = 5;
};

/// Splits one segmentation TrainConfig into the two model configurations.
SegSystemConfig seg_system_config(const TrainConfig& base, std::size_t np_members, std::size_t small_members = 1);

SegSystem train_seg_system(const SegDataset& data, const SegSystemConfig& cfg, std::uint64_t base_seed,
                           const aug::AugPipeline* aug = nullptr);

/// IRMA and NV from the small-lesion model, NP from the NP ensemble.
SoftMaskSet predict_seg_system(const SegSystem& s, const Plane& image);

/// Mean of member outputs (probability vectors or 1-element scalars).
std::vector<double> ensemble_predict(const Ensemble& e, std::span<const double> x);
/// Population variance of member outputs, elementwise.
std::vector<double> ensemble_variance(const Ensemble& e, std::span<const double> x);
SoftMaskSet ensemble_predict_seg(const Ensemble& e, const Plane& image);

inline constexpr std::array<int, 4> kDefaultRotations{90, 180, 270, 360};
inline constexpr std::array<double, 5> kDefaultMpaScales{1.0, 1.1, 1.2, 1.3, 1.4};

using PlanePredictor = std::function<std::vector<double>(const Plane&)>;
using SegPredictor = std::function<SoftMaskSet(const Plane&)>;

/// Mean over the identity, horizontal-flip and vertical-flip branches.
std::vector<double> tta_flip_predict(const PlanePredictor& predict, const Plane& x);

/// Flip TTA for a feature vector laid out on its feature grid.
std::vector<double> tta_flip_predict(const Ensemble& e, std::span<const double> features);

/// Rotate the input by each angle, predict, rotate the prediction back and
/// average. Angles are multiples of 90 degrees; the input must be square.
SoftMaskSet tta_rotate_seg(const SegPredictor& predict, const Plane& x,
                           std::span<const int> angles_deg = kDefaultRotations);

/// Multi-scale aggregation: resize the input by each scale (>= 1), predict,
/// resize the soft mask back to the input shape and average.
SoftMaskSet mpa_seg(const SegPredictor& predict, const Plane& x, std::span<const double> scales);

/// Inference output of a tabular ensemble with optional flip TTA.
std::vector<double> predict_tabular(const Ensemble& e, std::span<const double> features, bool flip_tta);

/// Writes `<stem>_<i>.skl` checkpoints and the JSON manifest `<stem>.json`:
/// {"format":"scarcekit-ensemble","version":1,"head":...,
/// "members":[{"path":...,"seed":...}, ...]}. Paths are relative to the
/// manifest's directory.
void save_ensemble(const std::filesystem::path& dir, const Ensemble& e,
                   const std::string& stem = "ensemble");
Ensemble load_ensemble(const std::filesystem::path& manifest);

/// Manifests `seg_small.json` and `seg_np.json` inside dir.
void save_seg_system(const std::filesystem::path& dir, const SegSystem& s);
SegSystem load_seg_system(const std::filesystem::path& dir);

}  // namespace sk
