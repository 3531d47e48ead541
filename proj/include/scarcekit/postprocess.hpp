#pragma once

#include <cstddef>

#include "scarcekit/dataset.hpp"
#include "scarcekit/raster.hpp"

namespace sk::post {

/// Class-specific operating thresholds for a scalar grade regressor.
struct GradeDecisionRule {
  double low = 0.54;
  double high = 1.5;

  void validate() const;
};

/// Square max filter of odd size k, clipped at the raster edge.
BinaryPlane dilate(const BinaryPlane& mask, int k);

/// Where IRMA and NV are both positive, keep only the channel with the
/// strictly larger soft score; ties keep IRMA. NP is untouched.
MaskSet reconcile_irma_nv(const SoftMaskSet& soft, const MaskSet& bin);

/// 0 below rule.low, 1 in [low, high), 2 from high upward.
OrdinalLabel quality_decision(double raw, const GradeDecisionRule& rule = {});

struct PostEditRule {
  std::size_t nv_min_pixels = 1;
};

/// NV detected (>= nv_min_pixels) -> PDR (2); nothing detected in any
/// channel -> normal (0); otherwise the grade is returned unchanged.
OrdinalLabel grade_postedit(OrdinalLabel grade, const MaskSet& masks, const PostEditRule& rule = {});

struct SegPostConfig {
  bool reconcile = true;
  int np_dilation = 5;        // kernel at the reference side; 1 disables
  int reference_side = 1024;  // <= 0 applies np_dilation unscaled
};

/// NP kernel for an image of the given side: np_dilation scaled by
/// side / reference_side and rounded to the nearest odd size >= 1.
int effective_np_kernel(const SegPostConfig& cfg, int side);

/// Segmentation post-processing in fixed order: IRMA/NV reconciliation,
/// then NP dilation with the effective kernel.
MaskSet postprocess_seg(const SoftMaskSet& soft, const MaskSet& bin, const SegPostConfig& cfg = {});

}  // namespace sk::post
