#include "scarcekit/geometry.hpp"

#include <algorithm>
#include <vector>

namespace sk::geom {

namespace {

double source_coord(int dst, int dst_len, int src_len) {
  const double scale = static_cast<double>(src_len) / dst_len;
  return std::clamp((dst + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_len - 1));
}

double sample_bilinear(const Plane& in, double sr, double sc) {
  const int r0 = static_cast<int>(std::floor(sr));
  const int c0 = static_cast<int>(std::floor(sc));
  const double fr = sr - r0, fc = sc - c0;
  const int h = in.height(), w = in.width();
  const int ra = reflect101(r0, h), rb = reflect101(r0 + 1, h);
  const int ca = reflect101(c0, w), cb = reflect101(c0 + 1, w);
  const double top = in(ra, ca) * (1.0 - fc) + in(ra, cb) * fc;
  const double bottom = in(rb, ca) * (1.0 - fc) + in(rb, cb) * fc;
  return top * (1.0 - fr) + bottom * fr;
}

}  // namespace

Plane resize_bilinear(const Plane& in, int width, int height) {
  if (width <= 0 || height <= 0) throw InputError("resize target must be positive");
  if (width == in.width() && height == in.height()) return in;
  Plane out(width, height);
  for (int r = 0; r < height; ++r) {
    const double sr = source_coord(r, height, in.height());
    const int r0 = static_cast<int>(sr);
    const int r1 = std::min(r0 + 1, in.height() - 1);
    const double fr = sr - r0;
    for (int c = 0; c < width; ++c) {
      const double sc = source_coord(c, width, in.width());
      const int c0 = static_cast<int>(sc);
      const int c1 = std::min(c0 + 1, in.width() - 1);
      const double fc = sc - c0;
      const double top = in(r0, c0) * (1.0 - fc) + in(r0, c1) * fc;
      const double bottom = in(r1, c0) * (1.0 - fc) + in(r1, c1) * fc;
      out(r, c) = top * (1.0 - fr) + bottom * fr;
    }
  }
  return out;
}

Plane box_mean(const Plane& in, int radius) {
  const int h = in.height(), w = in.width();
  // Summed-area table with a zero row/column of padding.
  std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  auto at = [&](int r, int c) -> double& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) at(r + 1, c + 1) = in(r, c) + at(r, c + 1) + at(r + 1, c) - at(r, c);
  Plane out(w, h);
  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(0, r - radius), r1 = std::min(h, r + radius + 1);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - radius), c1 = std::min(w, c + radius + 1);
      const double sum = at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
      out(r, c) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

Plane warp_bilinear(const Plane& in, const InverseMap& map) {
  Plane out(in.width(), in.height());
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) {
      double sr = 0, sc = 0;
      map(r, c, sr, sc);
      out(r, c) = sample_bilinear(in, sr, sc);
    }
  }
  return out;
}

BinaryPlane warp_nearest(const BinaryPlane& in, const InverseMap& map) {
  BinaryPlane out(in.width(), in.height());
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) {
      double sr = 0, sc = 0;
      map(r, c, sr, sc);
      const int nr = reflect101(static_cast<int>(std::lround(sr)), in.height());
      const int nc = reflect101(static_cast<int>(std::lround(sc)), in.width());
      out(r, c) = in(nr, nc);
    }
  }
  return out;
}

}  // namespace sk::geom
