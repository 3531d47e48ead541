#include "scarcekit/postprocess.hpp"

#include <algorithm>
#include <cmath>

namespace sk::post {

void GradeDecisionRule::validate() const {
  if (!(low < high)) throw InputError("grade decision rule needs low < high");
}

BinaryPlane dilate(const BinaryPlane& mask, int k) {
  if (k < 1 || k % 2 == 0) throw InputError("dilation kernel must be odd and >= 1");
  const int r = k / 2, w = mask.width(), h = mask.height();
  if (r == 0) return mask;
  // Separable: a square max filter is a row max followed by a column max.
  BinaryPlane rows(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t m = 0;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r) && !m; ++dx) m = mask(y, dx);
      rows(y, x) = m;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t m = 0;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r) && !m; ++dy) m = rows(dy, x);
      out(y, x) = m;
    }
  return out;
}

MaskSet reconcile_irma_nv(const SoftMaskSet& soft, const MaskSet& bin) {
  if (soft.width() != bin.width() || soft.height() != bin.height())
    throw InputError("soft and binary masks differ in shape");
  constexpr int kIrma = static_cast<int>(Lesion::kIrma), kNv = static_cast<int>(Lesion::kNv);
  MaskSet out = bin;
  auto irma = out.channel(kIrma).values();
  auto nv = out.channel(kNv).values();
  auto s_irma = soft.channel(kIrma).values();
  auto s_nv = soft.channel(kNv).values();
  for (std::size_t i = 0; i < irma.size(); ++i) {
    if (!(irma[i] && nv[i])) continue;
    if (s_nv[i] > s_irma[i])
      irma[i] = 0;
    else
      nv[i] = 0;
  }
  return out;
}

OrdinalLabel quality_decision(double raw, const GradeDecisionRule& rule) {
  rule.validate();
  if (raw < rule.low) return OrdinalLabel(0);
  if (raw < rule.high) return OrdinalLabel(1);
  return OrdinalLabel(2);
}

OrdinalLabel grade_postedit(OrdinalLabel grade, const MaskSet& masks, const PostEditRule& rule) {
  const std::size_t nv = masks.positives(static_cast<int>(Lesion::kNv));
  if (nv >= std::max<std::size_t>(rule.nv_min_pixels, 1)) return OrdinalLabel(2);
  if (masks.positives(0) == 0 && masks.positives(1) == 0 && nv == 0) return OrdinalLabel(0);
  return grade;
}

int effective_np_kernel(const SegPostConfig& cfg, int side) {
  if (cfg.np_dilation < 1 || cfg.np_dilation % 2 == 0) throw InputError("NP dilation kernel must be odd and >= 1");
  if (cfg.reference_side <= 0) return cfg.np_dilation;
  const double scaled = cfg.np_dilation * static_cast<double>(side) / cfg.reference_side;
  const int half = static_cast<int>(std::lround((scaled - 1.0) / 2.0));
  return 2 * std::max(half, 0) + 1;
}

MaskSet postprocess_seg(const SoftMaskSet& soft, const MaskSet& bin, const SegPostConfig& cfg) {
  MaskSet out = cfg.reconcile ? reconcile_irma_nv(soft, bin) : bin;
  const int k = effective_np_kernel(cfg, std::max(bin.width(), bin.height()));
  if (k > 1) {
    constexpr int kNp = static_cast<int>(Lesion::kNp);
    out.channel(kNp) = dilate(out.channel(kNp), k);
  }
  return out;
}

}  // namespace sk::post
