#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "scarcekit/dataset.hpp"
#include "scarcekit/random.hpp"

namespace sk::aug {

/// Closed interval a parameter is drawn from.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Pixel-wise operators (Omega and Psi sets). They never touch masks.

struct BrightnessContrast {
  double brightness_limit = 0.2;  // b ~ U(-limit, limit)
  double contrast_limit = 0.2;    // c ~ U(-limit, limit); out = v*(1+c)+b
};
struct Gamma {
  Range gamma_limit{80, 120};  // out = v^(g/100)
};
struct Sharpen {
  Range alpha{0.2, 0.5};
  Range lightness{0.5, 1.0};
};
struct Blur {
  int blur_limit = 3;  // box kernel size drawn from odd sizes in [3, blur_limit]
};
struct Downscale {
  double scale_min = 0.7;
  double scale_max = 0.9;
};

// Geometric operators (applied jointly to image and masks).

struct Flip {
  bool horizontal = true;
  bool vertical = true;
};
struct ShiftScaleRotate {
  double shift_limit = 0.2;   // fraction of the side length
  double scale_limit = 0.1;   // scale ~ 1 + U(-limit, limit)
  double rotate_limit = 90;   // degrees
};
struct GridDistortion {
  int num_steps = 5;
  double distort_limit = 0.3;
};
/// Hole sizes are given in pixels at `reference_side` and scaled to the
/// actual image side at apply time (never below 1 px).
struct CoarseDropout {
  int max_holes = 3;
  int min_height = 32;
  int max_height = 128;
  int min_width = 32;
  int max_width = 128;
  int reference_side = 1024;
};
struct Affine {
  Range scale{0.8, 1.2};
};

using OpParams = std::variant<BrightnessContrast, Gamma, Sharpen, Blur, Downscale, Flip,
                              ShiftScaleRotate, GridDistortion, CoarseDropout, Affine>;

struct AugOp {
  OpParams params;
  double probability = 1.0;
};

std::string_view op_name(const OpParams& p);

/// Two-stage sampler: one op from omega and one from psi always, then each
/// geometric op independently with its own probability, in declared order.
struct AugPipeline {
  std::vector<AugOp> omega;
  std::vector<AugOp> psi;
  std::vector<AugOp> geometric;

  /// Throws InputError when omega/psi is empty, a probability leaves [0,1]
  /// or a parameter range is empty.
  void validate() const;
};

/// Operator lists for each task (segmentation, quality, grading).
AugPipeline build_pipeline(Task task);

struct AugSample {
  Plane image;
  std::optional<MaskSet> masks;
};

struct DropoutHole {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
};

/// What one augment call did: names of the applied ops in order, and the
/// rectangles CoarseDropout zeroed.
struct AugTrace {
  std::vector<std::string_view> applied;
  std::vector<DropoutHole> holes;
};

/// Applies one sampled draw of the pipeline. The output image is clamped to
/// [0,1]; masks follow geometric ops with nearest-neighbor sampling.
AugSample augment(const AugSample& sample, const AugPipeline& p, Rng& rng,
                  AugTrace* trace = nullptr);

std::pair<Image, std::optional<MaskSet>> augment(const Image& image,
                                                 const std::optional<MaskSet>& masks,
                                                 const AugPipeline& p, Rng& rng);

// Deterministic primitives used by the sampler (exposed for tests). Inputs in
// [0,1] give outputs in [0,1].
Plane brightness_contrast(const Plane& in, double brightness, double contrast);
Plane gamma(const Plane& in, double exponent);
Plane sharpen(const Plane& in, double alpha, double lightness);
Plane box_blur(const Plane& in, int kernel);
Plane downscale(const Plane& in, double scale);

}  // namespace sk::aug
