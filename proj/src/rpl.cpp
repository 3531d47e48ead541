#include "scarcekit/rpl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "scarcekit/io.hpp"

namespace sk {

double confidence_classifier(std::span<const double> probs) {
  if (probs.empty()) throw InputError("empty probability vector");
  return *std::max_element(probs.begin(), probs.end());
}

double confidence_regressor(double raw) { return -std::abs(std::round(raw) - raw); }

std::size_t PseudoBuckets::total() const {
  std::size_t n = 0;
  for (const auto& b : buckets) n += b.size();
  return n;
}

PseudoBuckets pseudo_label(const TabularPredictor& predict, Head head, const TabularDataset& unlabeled) {
  PseudoBuckets out;
  for (const auto& s : unlabeled.samples) {
    const auto y = predict(s.features);
    PseudoEntry e;
    e.id = s.id;
    e.label = decide_class(head, y);
    e.confidence = head == Head::kSoftmax ? confidence_classifier(y) : confidence_regressor(y.at(0));
    out.buckets[e.label].push_back(e);
  }
  for (auto& b : out.buckets)
    std::sort(b.begin(), b.end(), [](const PseudoEntry& a, const PseudoEntry& c) {
      if (a.confidence != c.confidence) return a.confidence > c.confidence;
      return a.id < c.id;
    });
  return out;
}

PseudoBuckets pseudo_label(const Ensemble& model, const TabularDataset& unlabeled, bool flip_tta) {
  return pseudo_label([&](std::span<const double> x) { return predict_tabular(model, x, flip_tta); },
                      model.head(), unlabeled);
}

std::size_t reliable_count(std::size_t bucket_size, std::size_t round, std::size_t rounds) {
  if (rounds < 1 || round < 1 || round > rounds) throw InputError("round index must satisfy 1 <= t <= T");
  if (round == rounds) return bucket_size;
  // Integer form of floor(t/T * n) avoids rounding t/T.
  return bucket_size * round / rounds;
}

TabularDataset select_reliable(const PseudoBuckets& b, std::size_t round, std::size_t rounds,
                               const TabularDataset& unlabeled) {
  std::unordered_map<std::int64_t, const TabularSample*> by_id;
  for (const auto& s : unlabeled.samples) by_id.emplace(s.id, &s);
  TabularDataset out{unlabeled.task, unlabeled.dim, {}};
  for (const auto& bucket : b.buckets) {
    const std::size_t take = reliable_count(bucket.size(), round, rounds);
    for (std::size_t i = 0; i < take; ++i) {
      const auto it = by_id.find(bucket[i].id);
      if (it == by_id.end()) throw InputError("pseudo label refers to unknown sample " + std::to_string(bucket[i].id));
      TabularSample s = *it->second;
      s.label = OrdinalLabel(bucket[i].label);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

void RplConfig::validate() const {
  if (rounds < 1) throw InputError("RPL needs T >= 1");
  if (members < 1) throw InputError("RPL needs at least one model per round");
  if (head == Head::kPixelSigmoid) throw InputError("RPL applies to classifiers and regressors only");
}

namespace {

Ensemble train_round(const TabularDataset& data, const RplConfig& cfg, std::size_t round) {
  try {
    // Same seed every round: each retrain starts from the same fresh init.
    return train_deep_ensemble(data, cfg.train, cfg.head, cfg.shape, cfg.members, cfg.train.seed);
  } catch (const TrainingDiverged& err) {
    throw TrainingDiverged(err.epoch(), std::string(err.what()) + ", round " + std::to_string(round));
  }
}

TabularDataset merged(const TabularDataset& labeled, const TabularDataset& selected) {
  TabularDataset out = labeled;
  out.samples.insert(out.samples.end(), selected.samples.begin(), selected.samples.end());
  return out;
}

RplResult run_rounds(const TabularDataset& labeled, const TabularDataset& unlabeled, const RplConfig& cfg,
                     std::size_t rounds) {
  cfg.validate();
  if (labeled.empty()) throw InputError("RPL needs labeled data");
  if (!unlabeled.empty() && unlabeled.dim != labeled.dim)
    throw InputError("labeled and unlabeled feature dimensions differ");
  RplResult result{train_round(labeled, cfg, 0), {}};
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto buckets = pseudo_label(result.model, unlabeled, cfg.flip_tta);
    for (int k = 0; k < kNumGrades; ++k) {
      const auto& bucket = buckets.buckets[k];
      RoundAudit a;
      a.round = t;
      a.label = k;
      a.bucket_size = bucket.size();
      a.selected = reliable_count(bucket.size(), t, rounds);
      a.min_conf_selected = a.selected ? bucket[a.selected - 1].confidence
                                       : std::numeric_limits<double>::quiet_NaN();
      result.audit.push_back(a);
    }
    const auto selected = select_reliable(buckets, t, rounds, unlabeled);
    result.model = train_round(merged(labeled, selected), cfg, t);
  }
  return result;
}

}  // namespace

RplResult rpl_train(const TabularDataset& labeled, const TabularDataset& unlabeled, const RplConfig& cfg) {
  return run_rounds(labeled, unlabeled, cfg, cfg.rounds);
}

RplResult naive_pl_train(const TabularDataset& labeled, const TabularDataset& unlabeled, const RplConfig& cfg) {
  return run_rounds(labeled, unlabeled, cfg, 1);
}

void write_audit_csv(const std::filesystem::path& path, const std::vector<RoundAudit>& audit) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "round,class,bucket_size,selected,min_conf_selected\n";
  for (const auto& a : audit) {
    out << a.round << ',' << a.label << ',' << a.bucket_size << ',' << a.selected << ',';
    if (!std::isnan(a.min_conf_selected)) out << io::format_double(a.min_conf_selected);
    out << '\n';
  }
}

}  // namespace sk
