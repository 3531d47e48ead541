#include "scarcekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scarcekit/geometry.hpp"
#include "scarcekit/random.hpp"

namespace sk {

std::array<std::size_t, kNumGrades> apportion(std::size_t n, const Proportions& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InputError("class proportions must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("class proportions must sum to 1");

  std::array<std::size_t, kNumGrades> counts{};
  std::array<double, kNumGrades> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < kNumGrades; ++k) {
    const double quota = p[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = quota - std::floor(quota);
    assigned += counts[k];
  }
  std::array<int, kNumGrades> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % kNumGrades]];
  return counts;
}

FeatureGrid feature_grid(std::size_t dim) {
  if (dim == 0) throw InputError("feature dimension must be positive");
  int rows = 1;
  for (int r = 1; static_cast<std::size_t>(r) * r <= dim; ++r)
    if (dim % r == 0) rows = r;
  return {rows, static_cast<int>(dim / rows)};
}

std::array<std::vector<double>, kNumGrades> ordinal_class_centers(const OrdinalSpec& spec) {
  const auto grid = feature_grid(spec.dim);
  Rng rng(derive_seed(spec.seed, {0xCE27E5}));
  std::normal_distribution<double> gauss;
  Plane u(grid.cols, grid.rows);
  for (double& v : u.values()) v = gauss(rng);
  // Symmetrize over the flip group so flipped inputs keep their class.
  const Plane h = geom::flip_horizontal(u), v = geom::flip_vertical(u),
              hv = geom::flip_vertical(geom::flip_horizontal(u));
  double norm = 0.0;
  std::vector<double> dir(spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) {
    dir[i] = (u.values()[i] + h.values()[i] + v.values()[i] + hv.values()[i]) / 4.0;
    norm += dir[i] * dir[i];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    std::fill(dir.begin(), dir.end(), 1.0);
    norm = std::sqrt(static_cast<double>(spec.dim));
  }
  std::array<std::vector<double>, kNumGrades> centers;
  for (int k = 0; k < kNumGrades; ++k) {
    centers[k].resize(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) centers[k][i] = k * spec.separation * dir[i] / norm;
  }
  return centers;
}

TabularDataset gen_ordinal_dataset(const OrdinalSpec& spec) {
  if (spec.n < 30) throw InputError("ordinal dataset needs n >= 30");
  if (spec.noise < 0.0) throw InputError("noise must be non-negative");
  if (spec.dim == 0) throw InputError("feature dimension must be positive");
  const auto counts = apportion(spec.n, spec.proportions);
  const auto centers = ordinal_class_centers(spec);

  std::vector<int> labels;
  labels.reserve(spec.n);
  for (int k = 0; k < kNumGrades; ++k) labels.insert(labels.end(), counts[k], k);
  Rng rng(derive_seed(spec.seed, {0x5A4D1E}));
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> gauss;
  TabularDataset out{spec.task, spec.dim, {}};
  out.samples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    TabularSample s;
    s.id = static_cast<std::int64_t>(i);
    s.label = OrdinalLabel(labels[i]);
    s.features = centers[labels[i]];
    if (spec.noise > 0.0)
      for (double& v : s.features) v += spec.noise * gauss(rng);
    out.samples.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr int kBackground = 95;
constexpr int kNpLevel = 30;
constexpr int kIrmaLevel = 170;
constexpr int kNvLevel = 240;
constexpr int kStripeLevel = 225;

template <typename F>
void for_disk(int size, int cr, int cc, int radius, F&& f) {
  for (int r = std::max(0, cr - radius); r <= std::min(size - 1, cr + radius); ++r)
    for (int c = std::max(0, cc - radius); c <= std::min(size - 1, cc + radius); ++c)
      if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) f(r, c);
}

}  // namespace

SegDataset gen_seg_dataset(const SegSpec& spec) {
  if (spec.size < 32) throw InputError("segmentation images need size >= 32");
  const int size = spec.size;
  SegDataset out;
  out.samples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(derive_seed(spec.seed, {0x5E6, i}));
    std::normal_distribution<double> gauss(0.0, 10.0);
    Raster<double> raw(size, size);
    for (double& v : raw.values()) v = kBackground + gauss(rng);
    MaskSet masks(size, size);
    auto& irma = masks.channel(static_cast<int>(Lesion::kIrma));
    auto& np = masks.channel(static_cast<int>(Lesion::kNp));
    auto& nv = masks.channel(static_cast<int>(Lesion::kNv));

    if (bernoulli(rng, spec.artifact_fraction)) {
      const int stripes = uniform_int(rng, 1, 3);
      for (int s = 0; s < stripes; ++s) {
        const int row = uniform_int(rng, 0, size - 2);
        const int thickness = uniform_int(rng, 1, 2);
        for (int r = row; r < std::min(size, row + thickness); ++r)
          for (int c = 0; c < size; ++c) raw(r, c) = kStripeLevel + gauss(rng) * 0.5;
      }
    } else {
      if (bernoulli(rng, spec.np_probability)) {
        const int regions = uniform_int(rng, 1, 2);
        for (int g = 0; g < regions; ++g) {
          const int r0 = uniform_int(rng, 6, 10);
          // Disks stay fully inside the image so every NP component keeps
          // at least the area of a radius-6 disk.
          const int cr = uniform_int(rng, 14, size - 15), cc = uniform_int(rng, 14, size - 15);
          const int disks = uniform_int(rng, 1, 3);
          for (int d = 0; d < disks; ++d) {
            const int radius = d == 0 ? r0 : uniform_int(rng, 6, 14);
            const int dr = d == 0 ? 0 : uniform_int(rng, -r0 + 1, r0 - 1);
            const int dc = d == 0 ? 0 : uniform_int(rng, -r0 + 1, r0 - 1);
            const int rr = std::clamp(cr + dr, radius, size - 1 - radius);
            const int rc = std::clamp(cc + dc, radius, size - 1 - radius);
            for_disk(size, rr, rc, radius, [&](int r, int c) { np(r, c) = 1; });
          }
        }
        for (int r = 0; r < size; ++r)
          for (int c = 0; c < size; ++c)
            if (np(r, c)) raw(r, c) = kNpLevel + gauss(rng) * 0.8;
      }
      auto place_dots = [&](BinaryPlane& channel, int level, double probability) {
        if (!bernoulli(rng, probability)) return;
        const int dots = uniform_int(rng, 1, 4);
        for (int d = 0; d < dots; ++d) {
          for (int attempt = 0; attempt < 20; ++attempt) {
            const int radius = uniform_int(rng, 1, 3);
            const int cr = uniform_int(rng, radius, size - 1 - radius);
            const int cc = uniform_int(rng, radius, size - 1 - radius);
            // Keep a one-pixel gap from existing small lesions so dots never
            // merge or overlap across channels.
            bool clear = true;
            for_disk(size, cr, cc, radius + 1, [&](int r, int c) {
              if (irma(r, c) || nv(r, c)) clear = false;
            });
            if (!clear) continue;
            for_disk(size, cr, cc, radius, [&](int r, int c) {
              channel(r, c) = 1;
              raw(r, c) = level + gauss(rng) * 0.8;
            });
            break;
          }
        }
      };
      place_dots(irma, kIrmaLevel, spec.irma_probability);
      place_dots(nv, kNvLevel, spec.nv_probability);
    }

    Raster<int> quantized(size, size);
    for (std::size_t p = 0; p < raw.size(); ++p)
      quantized.values()[p] = std::clamp(static_cast<int>(std::lround(raw.values()[p])), 0, 255);
    out.samples.push_back(SegSample{static_cast<std::int64_t>(i), normalize_image(quantized),
                                    std::move(masks)});
  }
  return out;
}

}  // namespace sk
