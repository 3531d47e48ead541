#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scarcekit/augment.hpp"
#include "scarcekit/dataset.hpp"
#include "scarcekit/losses.hpp"
#include "scarcekit/model.hpp"

namespace sk {

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 1e-2;
  std::size_t batch_size = 8;
  std::size_t epochs = 150;
  AuxLoss aux = AuxLoss::kFocal;  // segmentation only
  double alpha = 0.5;             // segmentation only
  ChannelSelection channels = kAllChannels;  // segmentation only
  std::uint64_t seed = 0;

  /// Throws InputError unless lr > 0, epochs >= 1, batch >= 1, alpha >= 0.
  void validate() const;
};

/// Desk-scale architectures.
struct ModelShape {
  int hidden = 32;
  double dropout = 0.2;
};
/// One hidden ReLU layer; softmax over kNumGrades classes.
Mlp make_classifier(std::size_t dim, const ModelShape& shape, std::uint64_t seed);
/// One hidden ReLU layer; scalar output.
Mlp make_regressor(std::size_t dim, const ModelShape& shape, std::uint64_t seed);
/// Per-pixel model over SegFeatures with a sigmoid per lesion channel: one
/// hidden ReLU layer, or a linear map when hidden <= 0.
inline constexpr int kSegHidden = 16;
Mlp make_segmenter(std::uint64_t seed, int hidden = kSegHidden);

/// Per-pixel feature stack: raw value plus box means at radii 1, 2 and 4.
class SegFeatures {
 public:
  static constexpr int kChannels = 4;
  static constexpr std::array<int, 3> kRadii{1, 2, 4};

  explicit SegFeatures(const Plane& image);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const double> pixel(std::size_t index) const {
    return {values_.data() + index * kChannels, static_cast<std::size_t>(kChannels)};
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Applies a pixel-sigmoid model to every pixel.
SoftMaskSet predict_seg(const Mlp& model, const Plane& image);

/// Decoupled-weight-decay Adam with constant learning rate.
class AdamW {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  AdamW(const Mlp& model, double learning_rate, double weight_decay);
  void step(Mlp& model, const Gradients& grads);

 private:
  double lr_;
  double wd_;
  std::size_t t_ = 0;
  Gradients m_;
  Gradients v_;
};

/// Mean loss and gradient of a tabular model over a batch. Softmax heads use
/// cross-entropy, scalar heads use Smooth L1 against the label value.
/// Samples must be labeled. Dropout is active when `rng` is non-null.
double tabular_batch_gradient(const Mlp& model, std::span<const TabularSample* const> batch,
                              Gradients& grads, Rng* rng);

/// Mean total segmentation loss and gradient over a batch of (image, mask)
/// pairs.
double seg_batch_gradient(const Mlp& model, std::span<const Plane* const> images,
                          std::span<const MaskSet* const> masks, const TrainConfig& cfg,
                          Gradients& grads);

struct TrainResult {
  Mlp model;
  std::vector<double> epoch_loss;
};

/// Mini-batch AdamW on the labeled samples of `data`. Deterministic for a
/// fixed cfg.seed. Throws TrainingDiverged on a non-finite loss.
TrainResult train(Mlp init, const TabularDataset& data, const TrainConfig& cfg);

/// Segmenter training; each epoch optionally draws a fresh augmentation of
/// every image from `aug`.
TrainResult train(Mlp init, const SegDataset& data, const TrainConfig& cfg,
                  const aug::AugPipeline* aug = nullptr);

/// Round-half-away-from-zero, clamped to the grade range.
int regression_class(double raw);

/// Class decision for one inference output of either tabular head.
int decide_class(Head head, std::span<const double> output);

}  // namespace sk
