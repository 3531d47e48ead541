#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "scarcekit/rpl.hpp"
#include "scarcekit/synth.hpp"

namespace sk {
namespace {

TEST(Confidence, Classifier) {
  EXPECT_DOUBLE_EQ(confidence_classifier(std::vector<double>{1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(confidence_classifier(std::vector<double>{0.5, 0.25, 0.25}), 0.5);
  EXPECT_DOUBLE_EQ(confidence_classifier(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}), 1.0 / 3);
  EXPECT_THROW(confidence_classifier(std::vector<double>{}), InputError);
}

TEST(Confidence, Regressor) {
  EXPECT_DOUBLE_EQ(confidence_regressor(1.0), 0.0);
  EXPECT_NEAR(confidence_regressor(1.4), -0.4, 1e-15);
  EXPECT_DOUBLE_EQ(confidence_regressor(0.5), -0.5);
}

// Unlabeled set whose first feature is the model output to return.
TabularDataset outputs_as_features(const std::vector<std::vector<double>>& outputs) {
  TabularDataset d{Task::kGrading, outputs.front().size(), {}};
  for (std::size_t i = 0; i < outputs.size(); ++i) d.samples.push_back({static_cast<std::int64_t>(i), outputs[i], std::nullopt});
  return d;
}

const TabularPredictor kEcho = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };

TEST(PseudoLabel, ClassifierBuckets) {
  const auto u = outputs_as_features({{0.9, 0.05, 0.05}, {0.2, 0.7, 0.1}, {0.05, 0.9, 0.05}});
  const auto b = pseudo_label(kEcho, Head::kSoftmax, u);
  ASSERT_EQ(b.buckets[0].size(), 1u);
  EXPECT_EQ(b.buckets[0][0], (PseudoEntry{0, 0, 0.9}));
  ASSERT_EQ(b.buckets[1].size(), 2u);
  EXPECT_EQ(b.buckets[1][0].id, 2);
  EXPECT_EQ(b.buckets[1][1].id, 1);
  EXPECT_TRUE(b.buckets[2].empty());
}

TEST(PseudoLabel, RegressorBuckets) {
  const auto u = outputs_as_features({{0.1}, {2.2}, {1.9}});
  const auto b = pseudo_label(kEcho, Head::kScalar, u);
  ASSERT_EQ(b.buckets[0].size(), 1u);
  EXPECT_EQ(b.buckets[0][0].id, 0);
  ASSERT_EQ(b.buckets[2].size(), 2u);
  EXPECT_EQ(b.buckets[2][0].id, 2);
  EXPECT_EQ(b.buckets[2][1].id, 1);
  EXPECT_TRUE(b.buckets[1].empty());
}

TEST(PseudoLabel, TiesBreakByAscendingId) {
  const auto u = outputs_as_features({{1.2}, {0.8}, {1.2}, {0.8}});
  const auto b = pseudo_label(kEcho, Head::kScalar, u);
  ASSERT_EQ(b.buckets[1].size(), 4u);
  std::vector<std::int64_t> ids;
  for (const auto& e : b.buckets[1]) ids.push_back(e.id);
  EXPECT_EQ(ids, (std::vector<std::int64_t>{0, 1, 2, 3}));
}

TEST(ReliableCount, Schedule) {
  EXPECT_EQ(reliable_count(50, 1, 5), 10u);
  EXPECT_EQ(reliable_count(50, 5, 5), 50u);
  EXPECT_EQ(reliable_count(7, 2, 5), 2u);
  EXPECT_EQ(reliable_count(0, 3, 5), 0u);
  EXPECT_THROW(reliable_count(10, 0, 5), InputError);
  EXPECT_THROW(reliable_count(10, 6, 5), InputError);
  for (std::size_t n = 0; n < 40; ++n)
    for (std::size_t t = 1; t < 5; ++t) EXPECT_LE(reliable_count(n, t, 5), reliable_count(n, t + 1, 5));
}

PseudoBuckets random_buckets(std::mt19937_64& rng, std::size_t n, TabularDataset& unlabeled) {
  std::uniform_real_distribution<double> u(-0.4, 2.4);
  std::vector<std::vector<double>> outputs;
  for (std::size_t i = 0; i < n; ++i) outputs.push_back({u(rng)});
  unlabeled = outputs_as_features(outputs);
  return pseudo_label(kEcho, Head::kScalar, unlabeled);
}

TEST(SelectReliable, PropertiesOverRandomBuckets) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    TabularDataset unlabeled;
    const auto b = random_buckets(rng, 80, unlabeled);
    EXPECT_EQ(b.total(), unlabeled.size());
    std::size_t prev = 0;
    for (std::size_t t = 1; t <= 5; ++t) {
      const auto sel = select_reliable(b, t, 5, unlabeled);
      EXPECT_GE(sel.size(), prev);
      prev = sel.size();
      for (int c = 0; c < kNumGrades; ++c) {
        const auto& bucket = b.buckets[c];
        const std::size_t k = reliable_count(bucket.size(), t, 5);
        if (k > 0 && k < bucket.size()) EXPECT_GE(bucket[k - 1].confidence, bucket[k].confidence);
      }
      for (const auto& s : sel.samples) {
        ASSERT_TRUE(s.label.has_value());
        EXPECT_EQ(s.label->value(), regression_class(s.features[0]));
      }
    }
    EXPECT_EQ(prev, unlabeled.size());
  }
}

TEST(SelectReliable, FirstRoundTakesTopFifth) {
  std::vector<std::vector<double>> outputs;
  for (int i = 0; i < 50; ++i) outputs.push_back({1.0 + 0.009 * i});
  const auto u = outputs_as_features(outputs);
  const auto b = pseudo_label(kEcho, Head::kScalar, u);
  const auto sel = select_reliable(b, 1, 5, u);
  ASSERT_EQ(sel.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sel.samples[i].id, i);
}

struct Pools {
  TabularDataset labeled, unlabeled;
};

Pools make_pools(std::uint64_t seed) {
  OrdinalSpec spec;
  spec.n = 120;
  spec.seed = seed;
  spec.separation = 2.0;
  const auto all = gen_ordinal_dataset(spec);
  auto [l, u] = split_train_dev(all, 0.25, seed);
  return {l, u.unlabeled()};
}

RplConfig quick_config() {
  RplConfig cfg;
  cfg.train.epochs = 8;
  cfg.train.learning_rate = 1e-3;
  cfg.train.seed = 3;
  return cfg;
}

TEST(RplTrain, SingleRoundEqualsNaive) {
  const auto p = make_pools(1);
  auto cfg = quick_config();
  cfg.rounds = 1;
  const auto a = rpl_train(p.labeled, p.unlabeled, cfg);
  const auto b = naive_pl_train(p.labeled, p.unlabeled, quick_config());
  EXPECT_EQ(a.model.members, b.model.members);
  ASSERT_EQ(b.audit.size(), 3u);
  std::size_t selected = 0;
  for (const auto& row : b.audit) {
    EXPECT_EQ(row.selected, row.bucket_size);
    selected += row.selected;
  }
  EXPECT_EQ(selected, p.unlabeled.size());
}

TEST(RplTrain, EmptyUnlabeledMatchesSupervised) {
  const auto p = make_pools(2);
  const auto cfg = quick_config();
  const TabularDataset none{Task::kGrading, p.labeled.dim, {}};
  const auto r = rpl_train(p.labeled, none, cfg);
  const auto sup = train_deep_ensemble(p.labeled, cfg.train, cfg.head, cfg.shape, cfg.members, cfg.train.seed);
  EXPECT_EQ(r.model.members, sup.members);
}

TEST(RplTrain, DeterministicWithAuditPerRound) {
  const auto p = make_pools(3);
  const auto cfg = quick_config();
  const auto a = rpl_train(p.labeled, p.unlabeled, cfg);
  const auto b = rpl_train(p.labeled, p.unlabeled, cfg);
  EXPECT_EQ(a.model.members, b.model.members);
  ASSERT_EQ(a.audit.size(), 5u * kNumGrades);
  for (const auto& row : a.audit) {
    EXPECT_EQ(row.selected, reliable_count(row.bucket_size, row.round, 5));
    if (row.selected == 0) EXPECT_TRUE(std::isnan(row.min_conf_selected));
  }
}

TEST(RplTrain, AuditCsv) {
  const auto path = std::filesystem::temp_directory_path() / "scarcekit_audit_test.csv";
  write_audit_csv(path, {{1, 0, 4, 0, std::nan("")}, {1, 1, 10, 2, -0.25}});
  std::ifstream in(path);
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_EQ(header, "round,class,bucket_size,selected,min_conf_selected");
  EXPECT_EQ(r1, "1,0,4,0,");
  EXPECT_EQ(r2, "1,1,10,2,-0.25");
  std::filesystem::remove(path);
}

TEST(RplConfigTest, Validation) {
  auto cfg = quick_config();
  cfg.rounds = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = quick_config();
  cfg.head = Head::kPixelSigmoid;
  EXPECT_THROW(cfg.validate(), InputError);
}

}  // namespace
}  // namespace sk
