#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "scarcekit/dataset.hpp"
#include "scarcekit/ensemble.hpp"
#include "scarcekit/train.hpp"

namespace sk {

/// Max class probability.
double confidence_classifier(std::span<const double> probs);

/// -|round(raw) - raw|, so that larger means more confident for both heads.
double confidence_regressor(double raw);

struct PseudoEntry {
  std::int64_t id = 0;
  int label = 0;
  double confidence = 0.0;

  bool operator==(const PseudoEntry&) const = default;
};

/// Unlabeled samples grouped by predicted class, each bucket sorted by
/// descending confidence with ties broken by ascending id.
struct PseudoBuckets {
  std::array<std::vector<PseudoEntry>, kNumGrades> buckets;

  std::size_t total() const;
  bool operator==(const PseudoBuckets&) const = default;
};

/// Raw model output for one feature vector (probabilities or a scalar).
using TabularPredictor = std::function<std::vector<double>(std::span<const double>)>;

/// Predicts every unlabeled sample and assigns it to the bucket of its
/// predicted class (argmax, or clamped rounding for a scalar head).
PseudoBuckets pseudo_label(const TabularPredictor& predict, Head head, const TabularDataset& unlabeled);
PseudoBuckets pseudo_label(const Ensemble& model, const TabularDataset& unlabeled, bool flip_tta = false);

/// floor(t / T * n): the size of the reliable prefix of an n-entry bucket in
/// round t of T.
std::size_t reliable_count(std::size_t bucket_size, std::size_t round, std::size_t rounds);

/// Takes the reliable prefix of every bucket and returns the selected
/// samples, labeled with their pseudo labels, in bucket order.
TabularDataset select_reliable(const PseudoBuckets& b, std::size_t round, std::size_t rounds,
                               const TabularDataset& unlabeled);

struct RplConfig {
  std::size_t rounds = 5;       // T
  std::size_t members = 1;      // models trained per round (deep ensemble)
  bool flip_tta = false;        // TTA while generating pseudo labels
  TrainConfig train;
  ModelShape shape;
  Head head = Head::kScalar;

  void validate() const;
};

struct RoundAudit {
  std::size_t round = 0;
  int label = 0;
  std::size_t bucket_size = 0;
  std::size_t selected = 0;
  double min_conf_selected = 0.0;  // NaN when nothing was selected
};

struct RplResult {
  Ensemble model;
  std::vector<RoundAudit> audit;
};

/// Round 0 trains on labeled data; each round t = 1..T pseudo-labels the
/// unlabeled set with the latest model, keeps the reliable fraction t/T of
/// each class bucket and retrains from scratch on labeled + selected.
RplResult rpl_train(const TabularDataset& labeled, const TabularDataset& unlabeled, const RplConfig& cfg);

/// Single round that keeps every pseudo label.
RplResult naive_pl_train(const TabularDataset& labeled, const TabularDataset& unlabeled, const RplConfig& cfg);

/// CSV `round,class,bucket_size,selected,min_conf_selected`.
void write_audit_csv(const std::filesystem::path& path, const std::vector<RoundAudit>& audit);

}  // namespace sk
