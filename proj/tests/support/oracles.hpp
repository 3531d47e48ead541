#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library code it is checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "scarcekit/raster.hpp"

namespace sk::oracle {

inline BinaryPlane random_binary(std::mt19937_64& rng, int w, int h, double p) {
  std::bernoulli_distribution on(p);
  BinaryPlane out(w, h);
  for (auto& v : out.values()) v = on(rng) ? 1 : 0;
  return out;
}

inline MaskSet random_masks(std::mt19937_64& rng, int w, int h, double p) {
  return MaskSet({random_binary(rng, w, h, p), random_binary(rng, w, h, p), random_binary(rng, w, h, p)});
}

inline SoftMaskSet random_soft(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  SoftMaskSet out(w, h);
  for (int c = 0; c < kNumLesions; ++c)
    for (auto& v : out.channel(c).values()) v = u(rng);
  return out;
}

struct Counts {
  double pred = 0, gt = 0, both = 0;
};

inline Counts count(const BinaryPlane& pred, const BinaryPlane& gt) {
  Counts c;
  for (int r = 0; r < pred.height(); ++r)
    for (int col = 0; col < pred.width(); ++col) {
      c.pred += pred(r, col) != 0;
      c.gt += gt(r, col) != 0;
      c.both += pred(r, col) != 0 && gt(r, col) != 0;
    }
  return c;
}

inline double dice(const BinaryPlane& pred, const BinaryPlane& gt) {
  const auto c = count(pred, gt);
  return c.pred + c.gt == 0 ? 1.0 : 2.0 * c.both / (c.pred + c.gt);
}

inline double jaccard(const BinaryPlane& pred, const BinaryPlane& gt) {
  const auto c = count(pred, gt);
  const double uni = c.pred + c.gt - c.both;
  return uni == 0 ? 1.0 : c.both / uni;
}

/// Cohen's quadratic kappa from the expanded sample list: one minus the mean
/// squared disagreement of matched pairs over that of all (truth, pred)
/// cross pairs.
inline double kappa(const std::vector<int>& truth, const std::vector<int>& pred) {
  const double n = static_cast<double>(truth.size());
  double observed = 0.0, expected = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) observed += std::pow(truth[i] - pred[i], 2);
  for (int t : truth)
    for (int p : pred) expected += std::pow(t - p, 2);
  return 1.0 - (observed / n) / (expected / (n * n));
}

/// Expands a row-major C x C count table into parallel truth/pred lists.
inline void expand(const std::vector<std::uint64_t>& counts, int classes, std::vector<int>& truth,
                   std::vector<int>& pred) {
  for (int t = 0; t < classes; ++t)
    for (int p = 0; p < classes; ++p)
      for (std::uint64_t k = 0; k < counts[t * classes + p]; ++k) {
        truth.push_back(t);
        pred.push_back(p);
      }
}

/// Fraction of (positive, negative) pairs ranked correctly, ties count half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Brute-force square max filter: every output pixel scans its full window.
inline BinaryPlane max_filter(const BinaryPlane& in, int k) {
  const int r = k / 2;
  BinaryPlane out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      std::uint8_t m = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < in.height() && xx >= 0 && xx < in.width()) m = std::max(m, in(yy, xx));
        }
      out(y, x) = m;
    }
  return out;
}

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h = 1e-4) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor): relative error that stays meaningful near 0.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace sk::oracle
