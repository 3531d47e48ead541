#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scarcekit/dataset.hpp"
#include "scarcekit/raster.hpp"

namespace sk {

/// C x C counts, rows = truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = kNumGrades);
  ConfusionMatrix(int classes, std::vector<std::uint64_t> counts);
  static ConfusionMatrix from(std::span<const int> truth, std::span<const int> pred,
                              int classes = kNumGrades);

  int classes() const noexcept { return classes_; }
  std::uint64_t operator()(int truth, int pred) const { return counts_[index(truth, pred)]; }
  void add(int truth, int pred, std::uint64_t n = 1) { counts_[index(truth, pred)] += n; }
  std::uint64_t total() const;
  ConfusionMatrix transposed() const;

 private:
  std::size_t index(int t, int p) const;

  int classes_;
  std::vector<std::uint64_t> counts_;
};

/// 2|P∩G| / (|P| + |G|); 1 when both are empty.
double dsc(const BinaryPlane& pred, const BinaryPlane& gt);
/// |P∩G| / |P∪G|; 1 when both are empty.
double iou(const BinaryPlane& pred, const BinaryPlane& gt);
double mean_dsc(const MaskSet& pred, const MaskSet& gt);
double mean_iou(const MaskSet& pred, const MaskSet& gt);

/// Quadratic weighted kappa with weights (i-j)^2/(C-1)^2. Throws
/// NumericalError when the expected-disagreement denominator is zero.
double qwk(const ConfusionMatrix& cm);

/// Rank AUC of one binary problem (ties earn half credit).
/// Requires at least one positive and one negative.
double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

struct AucResult {
  double macro = 0.0;
  std::vector<double> per_class;   // NaN for skipped classes
  std::vector<int> skipped;        // classes lacking positives or negatives
};

/// Macro one-vs-rest AUC over the evaluable classes. scores[i][c] is the
/// score of sample i for class c. Throws InputError when no class is
/// evaluable.
AucResult auc_macro_ovr(const std::vector<std::vector<double>>& scores, std::span<const int> truth);

/// One-vs-rest scores of a scalar regressor output: -|raw - c|.
std::vector<double> regression_class_scores(double raw);

/// Fraction of equal entries. Throws InputError for empty or mismatched input.
double accuracy(std::span<const int> pred, std::span<const int> truth);

}  // namespace sk
