#pragma once

#include <cmath>
#include <functional>

#include "scarcekit/raster.hpp"

namespace sk::geom {

template <typename T>
Raster<T> flip_horizontal(const Raster<T>& in) {
  Raster<T> out(in.width(), in.height());
  for (int r = 0; r < in.height(); ++r)
    for (int c = 0; c < in.width(); ++c) out(r, c) = in(r, in.width() - 1 - c);
  return out;
}

template <typename T>
Raster<T> flip_vertical(const Raster<T>& in) {
  Raster<T> out(in.width(), in.height());
  for (int r = 0; r < in.height(); ++r)
    for (int c = 0; c < in.width(); ++c) out(r, c) = in(in.height() - 1 - r, c);
  return out;
}

/// Rotate counter-clockwise by quarter_turns * 90 degrees (any integer,
/// reduced mod 4).
template <typename T>
Raster<T> rotate90(const Raster<T>& in, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return in;
  const int w = in.width(), h = in.height();
  Raster<T> out(k == 2 ? w : h, k == 2 ? h : w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      switch (k) {
        case 1: out(w - 1 - c, r) = in(r, c); break;
        case 2: out(h - 1 - r, w - 1 - c) = in(r, c); break;
        default: out(c, h - 1 - r) = in(r, c); break;
      }
    }
  }
  return out;
}

/// Reflect-101 border index (…2 1 | 0 1 2 … n-1 | n-2 …).
inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Bilinear resize with half-pixel centers; edges clamp.
Plane resize_bilinear(const Plane& in, int width, int height);

/// Mean over the (2r+1)x(2r+1) window centered at each pixel, clipped to
/// the raster.
Plane box_mean(const Plane& in, int radius);

/// Maps an output pixel (row, col) to fractional source coordinates.
using InverseMap = std::function<void(double row, double col, double& src_row, double& src_col)>;

/// Samples `in` at the inverse-mapped coordinates with bilinear
/// interpolation and reflect-101 borders.
Plane warp_bilinear(const Plane& in, const InverseMap& map);

/// Nearest-neighbor counterpart of warp_bilinear for label rasters.
BinaryPlane warp_nearest(const BinaryPlane& in, const InverseMap& map);

}  // namespace sk::geom
