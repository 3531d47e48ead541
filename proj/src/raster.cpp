#include "scarcekit/raster.hpp"

#include <cmath>
#include <string>

namespace sk {

Image::Image(Plane pixels) : pixels_(std::move(pixels)) {
  if (pixels_.width() < kMinImageSide || pixels_.height() < kMinImageSide)
    throw InputError("image sides must be >= " + std::to_string(kMinImageSide));
  for (double v : pixels_.values())
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("image value outside [0,1]");
}

Image Image::clamped(Plane pixels) {
  for (double& v : pixels.values()) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  return Image(std::move(pixels));
}

MaskSet::MaskSet(int width, int height) {
  for (auto& ch : channels_) ch = BinaryPlane(width, height, 0);
}

MaskSet::MaskSet(std::array<BinaryPlane, kNumLesions> channels)
    : channels_(std::move(channels)) {
  for (const auto& ch : channels_) {
    if (!ch.same_shape(channels_[0])) throw InputError("mask channels differ in shape");
    for (auto v : ch.values())
      if (v > 1) throw InputError("mask value is not binary");
  }
}

std::size_t MaskSet::positives(int c) const {
  const auto& ch = channels_.at(c);
  return static_cast<std::size_t>(std::count(ch.values().begin(), ch.values().end(), 1));
}

SoftMaskSet::SoftMaskSet(int width, int height, double fill) {
  for (auto& ch : channels_) ch = Plane(width, height, fill);
}

SoftMaskSet::SoftMaskSet(std::array<Plane, kNumLesions> channels)
    : channels_(std::move(channels)) {
  for (const auto& ch : channels_) {
    if (!ch.same_shape(channels_[0])) throw InputError("soft mask channels differ in shape");
    for (double v : ch.values())
      if (!(v >= 0.0 && v <= 1.0)) throw InputError("soft mask value outside [0,1]");
  }
}

MaskSet SoftMaskSet::binarize(double threshold) const {
  std::array<BinaryPlane, kNumLesions> out;
  for (int c = 0; c < kNumLesions; ++c) {
    const auto& src = channels_[c];
    out[c] = BinaryPlane(src.width(), src.height());
    auto dst = out[c].values();
    auto in = src.values();
    for (std::size_t i = 0; i < in.size(); ++i) dst[i] = in[i] >= threshold ? 1 : 0;
  }
  return MaskSet(std::move(out));
}

}  // namespace sk
