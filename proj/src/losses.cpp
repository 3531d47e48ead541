#include "scarcekit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scarcekit/model.hpp"

namespace sk {

namespace {

void check_shapes(const MaskSet& y, const SoftMaskSet& yhat) {
  if (y.width() != yhat.width() || y.height() != yhat.height())
    throw InputError("target and prediction shapes differ");
}

MaskGradient zero_gradient(const MaskSet& y) {
  MaskGradient g;
  for (auto& p : g) p = Plane(y.width(), y.height(), 0.0);
  return g;
}

// Shared driver for the per-pixel mean-reduced losses.
template <typename PixelFn>
SegLoss pixelwise_mean(const MaskSet& y, const SoftMaskSet& yhat, const ChannelSelection& active, PixelFn&& fn) {
  check_shapes(y, yhat);
  SegLoss out{0.0, zero_gradient(y)};
  const auto channels = std::count(active.begin(), active.end(), true);
  if (channels == 0) throw InputError("no active lesion channel");
  const double n = static_cast<double>(y.channel(0).size()) * static_cast<double>(channels);
  for (int c = 0; c < kNumLesions; ++c) {
    if (!active[c]) continue;
    auto t = y.channel(c).values();
    auto p = yhat.channel(c).values();
    auto g = out.grad[c].values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double q = std::clamp(p[i], kProbEps, 1.0 - kProbEps);
      double loss = 0.0, dq = 0.0;
      fn(t[i] != 0, q, loss, dq);
      out.value += loss;
      g[i] = dq / n;
    }
  }
  out.value /= n;
  return out;
}

}  // namespace

std::string_view to_string(AuxLoss a) {
  switch (a) {
    case AuxLoss::kNone: return "none";
    case AuxLoss::kFocal: return "focal";
    case AuxLoss::kBce: return "bce";
  }
  return "?";
}

AuxLoss parse_aux_loss(std::string_view s) {
  if (s == "none") return AuxLoss::kNone;
  if (s == "focal") return AuxLoss::kFocal;
  if (s == "bce") return AuxLoss::kBce;
  throw InputError("unknown auxiliary loss '" + std::string(s) + "'");
}

ClassWeights class_weights(const MaskSet& y) {
  const double n = static_cast<double>(y.channel(0).size());
  ClassWeights w{};
  for (int c = 0; c < kNumLesions; ++c)
    w[c] = std::log(n / (static_cast<double>(y.positives(c)) + 1.0));
  return w;
}

SegLoss weighted_dice_loss(const MaskSet& y, const SoftMaskSet& yhat) {
  return weighted_dice_loss(y, yhat, class_weights(y));
}

SegLoss weighted_dice_loss(const MaskSet& y, const SoftMaskSet& yhat, const ClassWeights& w) {
  check_shapes(y, yhat);
  if (w[0] == 0.0 && w[1] == 0.0 && w[2] == 0.0)
    throw NumericalError("dice loss: all class weights are zero (degenerate denominator)");
  double inter = 0.0, denom = 0.0;
  for (int c = 0; c < kNumLesions; ++c) {
    auto t = y.channel(c).values();
    auto p = yhat.channel(c).values();
    double ci = 0.0, cd = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      ci += t[i] * p[i];
      cd += t[i] + p[i];
    }
    inter += w[c] * ci;
    denom += w[c] * cd;
  }
  SegLoss out{0.0, zero_gradient(y)};
  if (denom == 0.0) return out;  // empty target and empty prediction
  const double d = denom + kDiceEps;
  out.value = 1.0 - 2.0 * inter / d;
  for (int c = 0; c < kNumLesions; ++c) {
    auto t = y.channel(c).values();
    auto g = out.grad[c].values();
    for (std::size_t i = 0; i < t.size(); ++i)
      g[i] = -2.0 * w[c] * (t[i] * d - inter) / (d * d);
  }
  return out;
}

SegLoss focal_loss(const MaskSet& y, const SoftMaskSet& yhat, const ChannelSelection& active) {
  return pixelwise_mean(y, yhat, active, [](bool positive, double q, double& loss, double& dq) {
    if (positive) {
      loss = -(1.0 - q) * std::log(q);
      dq = std::log(q) - (1.0 - q) / q;
    } else {
      loss = -q * std::log(1.0 - q);
      dq = -std::log(1.0 - q) + q / (1.0 - q);
    }
  });
}

SegLoss bce_loss(const MaskSet& y, const SoftMaskSet& yhat, const ChannelSelection& active) {
  return pixelwise_mean(y, yhat, active, [](bool positive, double q, double& loss, double& dq) {
    if (positive) {
      loss = -std::log(q);
      dq = -1.0 / q;
    } else {
      loss = -std::log(1.0 - q);
      dq = 1.0 / (1.0 - q);
    }
  });
}

SegLoss seg_total_loss(const MaskSet& y, const SoftMaskSet& yhat, AuxLoss aux, double alpha,
                       const ChannelSelection& active) {
  if (!(alpha >= 0.0)) throw InputError("auxiliary weight alpha must be >= 0");
  ClassWeights w = class_weights(y);
  for (int c = 0; c < kNumLesions; ++c)
    if (!active[c]) w[c] = 0.0;
  SegLoss total = weighted_dice_loss(y, yhat, w);
  if (aux == AuxLoss::kNone || alpha == 0.0) return total;
  const SegLoss part = aux == AuxLoss::kFocal ? focal_loss(y, yhat, active) : bce_loss(y, yhat, active);
  total.value += alpha * part.value;
  for (int c = 0; c < kNumLesions; ++c) {
    auto g = total.grad[c].values();
    auto a = part.grad[c].values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * a[i];
  }
  return total;
}

ScalarLoss smooth_l1(double pred, double target, double beta) {
  const double d = pred - target;
  if (std::abs(d) < beta) return {d * d / (2.0 * beta), d / beta};
  return {std::abs(d) - beta / 2.0, d > 0 ? 1.0 : -1.0};
}

LogitLoss softmax_cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) throw InputError("label outside logit range");
  auto p = softmax(logits);
  LogitLoss out;
  out.value = -std::log(std::max(p[label], 1e-300));
  p[label] -= 1.0;
  out.grad = std::move(p);
  return out;
}

}  // namespace sk
