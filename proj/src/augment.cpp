#include "scarcekit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scarcekit/geometry.hpp"

namespace sk::aug {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_range(const Range& r, const char* what) {
  if (!(r.lo <= r.hi)) throw InputError(std::string("empty parameter range: ") + what);
}

void check_op(const AugOp& op) {
  if (!(op.probability >= 0.0 && op.probability <= 1.0))
    throw InputError("augmentation probability outside [0,1]");
  std::visit(Overloaded{
                 [](const BrightnessContrast& o) {
                   if (o.brightness_limit < 0 || o.contrast_limit < 0)
                     throw InputError("negative brightness/contrast limit");
                 },
                 [](const Gamma& o) {
                   check_range(o.gamma_limit, "gamma_limit");
                   if (o.gamma_limit.lo <= 0) throw InputError("gamma_limit must be positive");
                 },
                 [](const Sharpen& o) {
                   check_range(o.alpha, "alpha");
                   check_range(o.lightness, "lightness");
                 },
                 [](const Blur& o) {
                   if (o.blur_limit < 3) throw InputError("blur_limit must be >= 3");
                 },
                 [](const Downscale& o) {
                   if (!(o.scale_min > 0 && o.scale_min <= o.scale_max && o.scale_max <= 1))
                     throw InputError("downscale range must satisfy 0 < min <= max <= 1");
                 },
                 [](const Flip& o) {
                   if (!o.horizontal && !o.vertical) throw InputError("flip needs an axis");
                 },
                 [](const ShiftScaleRotate& o) {
                   if (o.shift_limit < 0 || o.scale_limit < 0 || o.scale_limit >= 1 ||
                       o.rotate_limit < 0)
                     throw InputError("invalid shift/scale/rotate limits");
                 },
                 [](const GridDistortion& o) {
                   if (o.num_steps < 1 || o.distort_limit < 0 || o.distort_limit >= 1)
                     throw InputError("invalid grid distortion parameters");
                 },
                 [](const CoarseDropout& o) {
                   if (o.max_holes < 1 || o.min_height < 1 || o.min_width < 1 ||
                       o.min_height > o.max_height || o.min_width > o.max_width ||
                       o.reference_side < 1)
                     throw InputError("invalid coarse dropout bounds");
                 },
                 [](const Affine& o) {
                   check_range(o.scale, "scale");
                   if (o.scale.lo <= 0) throw InputError("affine scale must be positive");
                 },
             },
             op.params);
}

int scaled_extent(int px, int reference, int side) {
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(px) * side / reference)));
}

// Maps `dst` through a piecewise-linear monotone function defined by
// control points (uniform in destination space, jittered in source space).
double piecewise(double dst, const std::vector<double>& src_knots, double extent) {
  const int steps = static_cast<int>(src_knots.size()) - 1;
  const double cell = extent / steps;
  const int k = std::clamp(static_cast<int>(std::floor(dst / cell)), 0, steps - 1);
  const double t = (dst - k * cell) / cell;
  return src_knots[k] + t * (src_knots[k + 1] - src_knots[k]);
}

std::vector<double> distorted_knots(int steps, double limit, double extent, Rng& rng) {
  std::vector<double> widths(steps);
  for (double& w : widths) w = 1.0 + uniform(rng, -limit, limit);
  double total = 0.0;
  for (double w : widths) total += w;
  std::vector<double> knots(steps + 1, 0.0);
  for (int i = 0; i < steps; ++i) knots[i + 1] = knots[i] + widths[i] / total * extent;
  knots.back() = extent;
  return knots;
}

void apply_geometric(AugSample& s, const geom::InverseMap& map) {
  s.image = geom::warp_bilinear(s.image, map);
  if (s.masks) {
    std::array<BinaryPlane, kNumLesions> ch;
    for (int c = 0; c < kNumLesions; ++c) ch[c] = geom::warp_nearest(s.masks->channel(c), map);
    s.masks = MaskSet(std::move(ch));
  }
}

template <typename F>
void map_masks(AugSample& s, F&& f) {
  if (!s.masks) return;
  std::array<BinaryPlane, kNumLesions> ch;
  for (int c = 0; c < kNumLesions; ++c) ch[c] = f(s.masks->channel(c));
  s.masks = MaskSet(std::move(ch));
}

void clamp_unit(Plane& p) {
  for (double& v : p.values()) v = std::clamp(v, 0.0, 1.0);
}

void apply_pixel(const AugOp& op, AugSample& s, Rng& rng) {
  std::visit(Overloaded{
                 [&](const BrightnessContrast& o) {
                   const double b = uniform(rng, -o.brightness_limit, o.brightness_limit);
                   const double c = uniform(rng, -o.contrast_limit, o.contrast_limit);
                   s.image = brightness_contrast(s.image, b, c);
                 },
                 [&](const Gamma& o) {
                   const double g = uniform(rng, o.gamma_limit.lo, o.gamma_limit.hi);
                   s.image = gamma(s.image, g / 100.0);
                 },
                 [&](const Sharpen& o) {
                   const double a = uniform(rng, o.alpha.lo, o.alpha.hi);
                   const double l = uniform(rng, o.lightness.lo, o.lightness.hi);
                   s.image = sharpen(s.image, a, l);
                 },
                 [&](const Blur& o) {
                   const int k = 3 + 2 * uniform_int(rng, 0, (o.blur_limit - 3) / 2);
                   s.image = box_blur(s.image, k);
                 },
                 [&](const Downscale& o) {
                   s.image = downscale(s.image, uniform(rng, o.scale_min, o.scale_max));
                 },
                 [](const auto&) { throw InputError("geometric op placed in a pixel-op set"); },
             },
             op.params);
  clamp_unit(s.image);
}

void apply_geometric_op(const AugOp& op, AugSample& s, Rng& rng, AugTrace* trace) {
  const int w = s.image.width(), h = s.image.height();
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  std::visit(
      Overloaded{
          [&](const Flip& o) {
            bool horizontal = o.horizontal;
            if (o.horizontal && o.vertical) horizontal = uniform_int(rng, 0, 1) == 0;
            if (horizontal) {
              s.image = geom::flip_horizontal(s.image);
              map_masks(s, [](const BinaryPlane& m) { return geom::flip_horizontal(m); });
            } else {
              s.image = geom::flip_vertical(s.image);
              map_masks(s, [](const BinaryPlane& m) { return geom::flip_vertical(m); });
            }
          },
          [&](const ShiftScaleRotate& o) {
            const double ty = uniform(rng, -o.shift_limit, o.shift_limit) * h;
            const double tx = uniform(rng, -o.shift_limit, o.shift_limit) * w;
            const double scale = 1.0 + uniform(rng, -o.scale_limit, o.scale_limit);
            const double angle =
                uniform(rng, -o.rotate_limit, o.rotate_limit) * std::numbers::pi / 180.0;
            const double cs = std::cos(angle), sn = std::sin(angle);
            apply_geometric(s, [=](double r, double c, double& sr, double& sc) {
              const double y = r - cy - ty, x = c - cx - tx;
              // Inverse of rotate-then-scale about the center.
              sr = (cs * y - sn * x) / scale + cy;
              sc = (sn * y + cs * x) / scale + cx;
            });
          },
          [&](const GridDistortion& o) {
            const auto ky = distorted_knots(o.num_steps, o.distort_limit, h - 1.0, rng);
            const auto kx = distorted_knots(o.num_steps, o.distort_limit, w - 1.0, rng);
            apply_geometric(s, [&](double r, double c, double& sr, double& sc) {
              sr = piecewise(r, ky, h - 1.0);
              sc = piecewise(c, kx, w - 1.0);
            });
          },
          [&](const CoarseDropout& o) {
            const int holes = uniform_int(rng, 1, o.max_holes);
            const int side = std::max(w, h);
            const int min_h = std::min(h, scaled_extent(o.min_height, o.reference_side, side));
            const int max_h = std::min(h, std::max(min_h, scaled_extent(o.max_height, o.reference_side, side)));
            const int min_w = std::min(w, scaled_extent(o.min_width, o.reference_side, side));
            const int max_w = std::min(w, std::max(min_w, scaled_extent(o.max_width, o.reference_side, side)));
            for (int i = 0; i < holes; ++i) {
              const int hh = uniform_int(rng, min_h, max_h);
              const int ww = uniform_int(rng, min_w, max_w);
              const int r0 = uniform_int(rng, 0, h - hh);
              const int c0 = uniform_int(rng, 0, w - ww);
              for (int r = r0; r < r0 + hh; ++r)
                for (int c = c0; c < c0 + ww; ++c) s.image(r, c) = 0.0;
              if (trace) trace->holes.push_back({r0, c0, hh, ww});
            }
          },
          [&](const Affine& o) {
            const double scale = uniform(rng, o.scale.lo, o.scale.hi);
            apply_geometric(s, [=](double r, double c, double& sr, double& sc) {
              sr = (r - cy) / scale + cy;
              sc = (c - cx) / scale + cx;
            });
          },
          [](const auto&) { throw InputError("pixel op placed in the geometric set"); },
      },
      op.params);
}

}  // namespace

std::string_view op_name(const OpParams& p) {
  return std::visit(Overloaded{
                        [](const BrightnessContrast&) { return "RandomBrightnessContrast"; },
                        [](const Gamma&) { return "RandomGamma"; },
                        [](const Sharpen&) { return "Sharpen"; },
                        [](const Blur&) { return "Blur"; },
                        [](const Downscale&) { return "Downscale"; },
                        [](const Flip&) { return "Flip"; },
                        [](const ShiftScaleRotate&) { return "ShiftScaleRotate"; },
                        [](const GridDistortion&) { return "GridDistortion"; },
                        [](const CoarseDropout&) { return "CoarseDropout"; },
                        [](const Affine&) { return "Affine"; },
                    },
                    p);
}

void AugPipeline::validate() const {
  if (omega.empty() || psi.empty()) throw InputError("omega and psi sets must be nonempty");
  for (const auto* set : {&omega, &psi, &geometric})
    for (const auto& op : *set) check_op(op);
}

AugPipeline build_pipeline(Task task) {
  AugPipeline p;
  p.omega = {{BrightnessContrast{0.2, 0.2}, 1.0}, {Gamma{{80, 120}}, 1.0}};
  p.psi = {{Sharpen{{0.2, 0.5}, {0.5, 1.0}}, 1.0}, {Blur{3}, 1.0}, {Downscale{0.7, 0.9}, 1.0}};
  switch (task) {
    case Task::kSegmentation:
      p.geometric = {
          {Flip{true, true}, 0.5},
          {ShiftScaleRotate{0.2, 0.1, 90}, 0.5},
          {GridDistortion{5, 0.3}, 0.2},
          {CoarseDropout{3, 32, 128, 32, 128, 1024}, 0.2},
          {Affine{{0.8, 1.2}}, 0.5},
      };
      break;
    case Task::kQuality:
      p.geometric = {
          {Flip{true, true}, 0.5},
          {ShiftScaleRotate{0.2, 0.1, 45}, 0.5},
      };
      break;
    case Task::kGrading:
      p.geometric = {
          {Flip{true, true}, 0.5},
          {ShiftScaleRotate{0.2, 0.1, 45}, 0.5},
          {CoarseDropout{5, 1, 5, 51, 512, 1024}, 0.2},
      };
      break;
  }
  return p;
}

AugSample augment(const AugSample& sample, const AugPipeline& p, Rng& rng, AugTrace* trace) {
  p.validate();
  if (sample.masks &&
      (sample.masks->width() != sample.image.width() || sample.masks->height() != sample.image.height()))
    throw InputError("image and masks differ in shape");
  AugSample s = sample;
  const auto& omega = p.omega[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p.omega.size()) - 1))];
  const auto& psi = p.psi[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p.psi.size()) - 1))];
  for (const auto* op : {&omega, &psi}) {
    apply_pixel(*op, s, rng);
    if (trace) trace->applied.push_back(op_name(op->params));
  }
  for (const auto& op : p.geometric) {
    if (!bernoulli(rng, op.probability)) continue;
    apply_geometric_op(op, s, rng, trace);
    if (trace) trace->applied.push_back(op_name(op.params));
  }
  clamp_unit(s.image);
  return s;
}

std::pair<Image, std::optional<MaskSet>> augment(const Image& image,
                                                 const std::optional<MaskSet>& masks,
                                                 const AugPipeline& p, Rng& rng) {
  auto out = augment(AugSample{image.pixels(), masks}, p, rng);
  return {Image(std::move(out.image)), std::move(out.masks)};
}

Plane brightness_contrast(const Plane& in, double brightness, double contrast) {
  Plane out = in;
  for (double& v : out.values()) v = std::clamp(v * (1.0 + contrast) + brightness, 0.0, 1.0);
  return out;
}

Plane gamma(const Plane& in, double exponent) {
  Plane out = in;
  for (double& v : out.values()) v = std::pow(std::max(v, 0.0), exponent);
  return out;
}

Plane sharpen(const Plane& in, double alpha, double lightness) {
  const Plane blurred = geom::box_mean(in, 1);
  Plane out = in;
  auto src = in.values();
  auto blur = blurred.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double detail = src[i] + lightness * (src[i] - blur[i]);
    dst[i] = std::clamp(src[i] * (1.0 - alpha) + alpha * detail, 0.0, 1.0);
  }
  return out;
}

Plane box_blur(const Plane& in, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw InputError("blur kernel must be odd and positive");
  return geom::box_mean(in, kernel / 2);
}

Plane downscale(const Plane& in, double scale) {
  const int w = std::max(1, static_cast<int>(std::lround(in.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(in.height() * scale)));
  return geom::resize_bilinear(geom::resize_bilinear(in, w, h), in.width(), in.height());
}

}  // namespace sk::aug
