#include "scarcekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sk {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  if (classes < 2) throw InputError("confusion matrix needs >= 2 classes");
}

ConfusionMatrix::ConfusionMatrix(int classes, std::vector<std::uint64_t> counts)
    : classes_(classes), counts_(std::move(counts)) {
  if (classes < 2 || counts_.size() != static_cast<std::size_t>(classes) * classes)
    throw InputError("confusion matrix counts do not match class count");
}

ConfusionMatrix ConfusionMatrix::from(std::span<const int> truth, std::span<const int> pred, int classes) {
  if (truth.size() != pred.size()) throw InputError("truth and prediction lengths differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

std::size_t ConfusionMatrix::index(int t, int p) const {
  if (t < 0 || t >= classes_ || p < 0 || p >= classes_) throw InputError("class index out of range");
  return static_cast<std::size_t>(t) * classes_ + p;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix ConfusionMatrix::transposed() const {
  ConfusionMatrix t(classes_);
  for (int i = 0; i < classes_; ++i)
    for (int j = 0; j < classes_; ++j) t.add(j, i, (*this)(i, j));
  return t;
}

namespace {

struct Overlap {
  std::size_t pred = 0, gt = 0, both = 0;
};

Overlap overlap(const BinaryPlane& pred, const BinaryPlane& gt) {
  if (!pred.same_shape(gt)) throw InputError("mask shapes differ");
  Overlap o;
  auto p = pred.values();
  auto g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    o.pred += p[i] != 0;
    o.gt += g[i] != 0;
    o.both += (p[i] != 0) && (g[i] != 0);
  }
  return o;
}

}  // namespace

double dsc(const BinaryPlane& pred, const BinaryPlane& gt) {
  const auto o = overlap(pred, gt);
  if (o.pred + o.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.pred + o.gt);
}

double iou(const BinaryPlane& pred, const BinaryPlane& gt) {
  const auto o = overlap(pred, gt);
  const std::size_t uni = o.pred + o.gt - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

double mean_dsc(const MaskSet& pred, const MaskSet& gt) {
  double s = 0.0;
  for (int c = 0; c < kNumLesions; ++c) s += dsc(pred.channel(c), gt.channel(c));
  return s / kNumLesions;
}

double mean_iou(const MaskSet& pred, const MaskSet& gt) {
  double s = 0.0;
  for (int c = 0; c < kNumLesions; ++c) s += iou(pred.channel(c), gt.channel(c));
  return s / kNumLesions;
}

double qwk(const ConfusionMatrix& cm) {
  const int k = cm.classes();
  const double total = static_cast<double>(cm.total());
  if (total <= 0) throw InputError("qwk of an empty confusion matrix");
  std::vector<double> rows(k, 0.0), cols(k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      rows[i] += static_cast<double>(cm(i, j));
      cols[j] += static_cast<double>(cm(i, j));
    }
  const double norm = static_cast<double>((k - 1) * (k - 1));
  double observed = 0.0, expected = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) / norm;
      observed += w * static_cast<double>(cm(i, j));
      expected += w * rows[i] * cols[j] / total;
    }
  }
  if (expected == 0.0) throw NumericalError("qwk undefined: expected disagreement is zero");
  return 1.0 - observed / expected;
}

double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw InputError("score and label lengths differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with average ranks for ties.
  double pos_rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (positive[order[t]]) {
        pos_rank_sum += avg_rank;
        ++npos;
      }
    i = j;
  }
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0) throw InputError("auc needs at least one positive and one negative");
  const double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

AucResult auc_macro_ovr(const std::vector<std::vector<double>>& scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw InputError("score and label lengths differ");
  if (scores.empty()) throw InputError("auc of an empty sample");
  const std::size_t classes = scores.front().size();
  AucResult out;
  out.per_class.assign(classes, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int evaluated = 0;
  std::vector<double> s(scores.size());
  std::vector<std::uint8_t> pos(scores.size());
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t npos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != classes) throw InputError("ragged score matrix");
      s[i] = scores[i][c];
      pos[i] = truth[i] == static_cast<int>(c);
      npos += pos[i];
    }
    if (npos == 0 || npos == scores.size()) {
      out.skipped.push_back(static_cast<int>(c));
      continue;
    }
    out.per_class[c] = binary_auc(s, pos);
    sum += out.per_class[c];
    ++evaluated;
  }
  if (evaluated == 0) throw InputError("auc: no class has both positives and negatives");
  out.macro = sum / evaluated;
  return out;
}

std::vector<double> regression_class_scores(double raw) {
  std::vector<double> s(kNumGrades);
  for (int c = 0; c < kNumGrades; ++c) s[c] = -std::abs(raw - c);
  return s;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw InputError("prediction and truth lengths differ");
  if (pred.empty()) throw InputError("accuracy of an empty sample");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

}  // namespace sk
