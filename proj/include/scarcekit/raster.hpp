#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scarcekit/errors.hpp"

namespace sk {

/// Dense row-major 2-D grid. No value-range invariant; the wrappers below
/// (Image, MaskSet, SoftMaskSet) add those.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InputError("negative raster dimension");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Raster(int width, int height, std::vector<T> values)
      : width_(width), height_(height), data_(std::move(values)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height)
      throw InputError("raster value count does not match dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Raster& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  template <typename U>
  bool same_shape(const Raster<U>& o) const noexcept {
    return width_ == o.width() && height_ == o.height();
  }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Plane = Raster<double>;
using BinaryPlane = Raster<std::uint8_t>;

inline constexpr int kMinImageSide = 8;
inline constexpr int kNumLesions = 3;

enum class Lesion : int { kIrma = 0, kNp = 1, kNv = 2 };

/// Normalized grayscale raster, every value in [0,1], both sides >= 8.
class Image {
 public:
  Image() = default;
  explicit Image(Plane pixels);

  const Plane& pixels() const noexcept { return pixels_; }
  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  double operator()(int r, int c) const { return pixels_(r, c); }

  /// Clamp to [0,1] then wrap. Used after pixel ops and artifact overlays.
  static Image clamped(Plane pixels);

  bool operator==(const Image&) const = default;

 private:
  Plane pixels_;
};

/// Three binary lesion channels (IRMA, NP, NV) sharing one shape.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(int width, int height);
  explicit MaskSet(std::array<BinaryPlane, kNumLesions> channels);

  const BinaryPlane& channel(Lesion l) const { return channels_[static_cast<int>(l)]; }
  const BinaryPlane& channel(int c) const { return channels_.at(c); }
  /// Mutable access; callers must keep values in {0,1}.
  BinaryPlane& channel(int c) { return channels_.at(c); }
  const std::array<BinaryPlane, kNumLesions>& channels() const noexcept { return channels_; }

  int width() const noexcept { return channels_[0].width(); }
  int height() const noexcept { return channels_[0].height(); }
  std::size_t positives(int c) const;

  bool operator==(const MaskSet&) const = default;

 private:
  std::array<BinaryPlane, kNumLesions> channels_;
};

/// Three soft lesion channels with values in [0,1].
class SoftMaskSet {
 public:
  SoftMaskSet() = default;
  SoftMaskSet(int width, int height, double fill = 0.0);
  explicit SoftMaskSet(std::array<Plane, kNumLesions> channels);

  const Plane& channel(int c) const { return channels_.at(c); }
  Plane& channel(int c) { return channels_.at(c); }
  const std::array<Plane, kNumLesions>& channels() const noexcept { return channels_; }

  int width() const noexcept { return channels_[0].width(); }
  int height() const noexcept { return channels_[0].height(); }

  /// Threshold every channel at `threshold` (value >= threshold is positive).
  MaskSet binarize(double threshold = 0.5) const;

  bool operator==(const SoftMaskSet&) const = default;

 private:
  std::array<Plane, kNumLesions> channels_;
};

}  // namespace sk
