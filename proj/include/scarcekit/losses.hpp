#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "scarcekit/raster.hpp"

namespace sk {

/// d(loss)/d(yhat) per lesion channel.
using MaskGradient = std::array<Plane, kNumLesions>;

struct SegLoss {
  double value = 0.0;
  MaskGradient grad;
};

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;
};

/// Clamp applied to soft predictions inside focal and BCE.
inline constexpr double kProbEps = 1e-7;
/// Added to the dice denominator.
inline constexpr double kDiceEps = 1e-6;

using ClassWeights = std::array<double, kNumLesions>;

/// Lesion channels a segmentation loss is computed over.
using ChannelSelection = std::array<bool, kNumLesions>;
inline constexpr ChannelSelection kAllChannels{true, true, true};
inline constexpr ChannelSelection kSmallLesionChannels{true, false, true};
inline constexpr ChannelSelection kNpChannel{false, true, false};

/// w_c = log(N_pix / (count_c + 1)): inverse-frequency log weights that stay
/// positive while count_c < N_pix - 1, so rarer lesions weigh more.
ClassWeights class_weights(const MaskSet& y);

/// 1 - 2 * sum_c w_c sum_i y*yhat / (sum_c w_c sum_i (y + yhat) + eps).
/// An all-empty target and prediction has loss 0. Weights summing to zero
/// throw NumericalError.
SegLoss weighted_dice_loss(const MaskSet& y, const SoftMaskSet& yhat);
SegLoss weighted_dice_loss(const MaskSet& y, const SoftMaskSet& yhat, const ClassWeights& w);

/// Multi-label focal variant: y=1 -> -(1-yhat) log yhat, y=0 -> -yhat log(1-yhat).
/// Mean over pixels and the active channels; inactive channels get zero
/// gradient.
SegLoss focal_loss(const MaskSet& y, const SoftMaskSet& yhat, const ChannelSelection& active = kAllChannels);

/// Per-pixel binary cross-entropy, mean over pixels and the active channels.
SegLoss bce_loss(const MaskSet& y, const SoftMaskSet& yhat, const ChannelSelection& active = kAllChannels);

enum class AuxLoss { kNone, kFocal, kBce };
std::string_view to_string(AuxLoss a);
AuxLoss parse_aux_loss(std::string_view s);

/// dice + alpha * aux over the active channels (dice weights of inactive
/// channels are zero).
SegLoss seg_total_loss(const MaskSet& y, const SoftMaskSet& yhat, AuxLoss aux, double alpha,
                       const ChannelSelection& active = kAllChannels);

/// Huber-style loss with beta = 1: d^2/(2 beta) inside |d| < beta, |d| - beta/2 outside.
ScalarLoss smooth_l1(double pred, double target, double beta = 1.0);

/// Softmax cross-entropy; returns the loss and d(loss)/d(logits).
struct LogitLoss {
  double value = 0.0;
  std::vector<double> grad;
};
LogitLoss softmax_cross_entropy(std::span<const double> logits, int label);

}  // namespace sk
