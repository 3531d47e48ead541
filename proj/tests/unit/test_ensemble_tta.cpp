#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "scarcekit/ensemble.hpp"
#include "scarcekit/geometry.hpp"
#include "scarcekit/synth.hpp"
#include "support/equivariant.hpp"
#include "support/oracles.hpp"

namespace sk {
namespace {

namespace fs = std::filesystem;

Mlp constant_scalar(double value, int dim = 4) {
  auto m = Mlp::zeros({dim, 1}, Head::kScalar, 0.0);
  m.layers()[0].bias[0] = value;
  return m;
}

Plane random_plane(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane p(w, h);
  for (auto& v : p.values()) v = u(rng);
  return p;
}

TabularDataset small_tabular(std::uint64_t seed) {
  OrdinalSpec spec;
  spec.n = 60;
  spec.seed = seed;
  spec.separation = 2.0;
  return gen_ordinal_dataset(spec);
}

TEST(AggregateMean, EqualInputsComeBackExactly) {
  for (double v : {0.1, 1.0 / 3.0, 0.7, 123.456}) {
    const std::vector<double> xs(7, v);
    EXPECT_EQ(aggregate_mean(xs), v);
  }
}

TEST(AggregateMean, OrderIndependent) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(5);
    for (auto& x : xs) x = u(rng);
    const double ref = aggregate_mean(xs);
    EXPECT_NEAR(ref, std::accumulate(xs.begin(), xs.end(), 0.0) / 5.0, 1e-15);
    std::shuffle(xs.begin(), xs.end(), rng);
    EXPECT_EQ(aggregate_mean(xs), ref);
  }
}

TEST(EnsemblePredict, MeanOfScalars) {
  const Ensemble e{{constant_scalar(1.0), constant_scalar(2.0)}, {0, 1}};
  const std::vector<double> x(4, 0.3);
  EXPECT_DOUBLE_EQ(ensemble_predict(e, x)[0], 1.5);
  EXPECT_DOUBLE_EQ(ensemble_variance(e, x)[0], 0.25);
}

TEST(EnsemblePredict, IdenticalMembersEqualSingle) {
  Rng rng(3);
  const Mlp m({4, 8, kNumGrades}, Head::kSoftmax, 0.0, rng);
  const Ensemble e{{m, m, m}, {1, 2, 3}};
  const std::vector<double> x{0.1, -0.5, 2.0, 1.0};
  EXPECT_EQ(ensemble_predict(e, x), m.forward(x));
  for (double v : ensemble_variance(e, x)) EXPECT_EQ(v, 0.0);
}

TEST(EnsemblePredict, ProbabilitiesStayOnSimplex) {
  std::vector<Mlp> members;
  for (int k = 0; k < 5; ++k) {
    Rng rng(k);
    members.emplace_back(std::vector<int>{4, 8, kNumGrades}, Head::kSoftmax, 0.0, rng);
  }
  const Ensemble e{members, {0, 1, 2, 3, 4}};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x{g(rng), g(rng), g(rng), g(rng)};
    const auto p = ensemble_predict(e, x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : ensemble_variance(e, x)) EXPECT_GE(v, 0.0);
  }
}

TEST(EnsembleValidate, MixedHeadsThrow) {
  Rng rng(1);
  const Ensemble e{{constant_scalar(1.0), Mlp({4, 3}, Head::kSoftmax, 0.0, rng)}, {0, 1}};
  EXPECT_THROW(e.validate(), InputError);
  EXPECT_THROW((Ensemble{{}, {}}).validate(), InputError);
}

TEST(DeepEnsemble, SingleMemberIsSupervisedModel) {
  const auto d = small_tabular(1);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 42;
  const ModelShape shape;
  const auto e = train_deep_ensemble(d, cfg, Head::kScalar, shape, 1, 42);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.members[0], train(make_regressor(d.dim, shape, 42), d, cfg).model);
}

TEST(DeepEnsemble, MembersDistinctAndDeterministic) {
  const auto d = small_tabular(2);
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto a = train_deep_ensemble(d, cfg, Head::kSoftmax, {}, 5, 7);
  const auto b = train_deep_ensemble(d, cfg, Head::kSoftmax, {}, 5, 7);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.members[i], b.members[i]);
    for (std::size_t j = i + 1; j < 5; ++j) EXPECT_NE(to_checkpoint_bytes(a.members[i]), to_checkpoint_bytes(a.members[j]));
  }
}

TEST(FlipTta, ConstantAndMeanModels) {
  std::mt19937_64 rng(4);
  const Plane x = random_plane(rng, 6, 4);
  const PlanePredictor constant = [](const Plane&) { return std::vector<double>{0.2, 0.3, 0.5}; };
  EXPECT_EQ(tta_flip_predict(constant, x), constant(x));
  const PlanePredictor mean = [](const Plane& p) {
    double s = 0.0;
    for (double v : p.values()) s += v;
    return std::vector<double>{s / static_cast<double>(p.size())};
  };
  EXPECT_NEAR(tta_flip_predict(mean, x)[0], mean(x)[0], 1e-15);
}

TEST(FlipTta, SymmetricInputBranchesAgree) {
  Plane x(4, 2, std::vector<double>{0.1, 0.5, 0.5, 0.1, 0.7, 0.2, 0.2, 0.7});
  ASSERT_EQ(geom::flip_horizontal(x), x);
  std::vector<Plane> seen;
  const PlanePredictor record = [&](const Plane& p) {
    seen.push_back(p);
    return std::vector<double>{p(0, 0)};
  };
  tta_flip_predict(record, x);
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0], seen[1]);
}

TEST(FlipTta, FeatureVectorUsesGrid) {
  const Ensemble e{{constant_scalar(1.25, 8)}, {0}};
  const std::vector<double> f{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_DOUBLE_EQ(tta_flip_predict(e, f)[0], 1.25);
  EXPECT_EQ(predict_tabular(e, f, false), ensemble_predict(e, f));
}

TEST(RotateTta, EquivariantOracleIsReproducedExactly) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Plane x = random_plane(rng, 17, 17);
    EXPECT_EQ(tta_rotate_seg(oracle::max3_sigmoid, x), oracle::max3_sigmoid(x));
  }
}

TEST(RotateTta, IdentityAngleOnly) {
  std::mt19937_64 rng(6);
  const Plane x = random_plane(rng, 8, 8);
  const SegPredictor asym = [](const Plane& p) {
    SoftMaskSet s(p.width(), p.height());
    for (int c = 0; c < kNumLesions; ++c) s.channel(c) = p;
    s.channel(0)(0, 0) = 1.0;
    return s;
  };
  const std::array<int, 1> only{360};
  EXPECT_EQ(tta_rotate_seg(asym, x, only), asym(x));
}

TEST(RotateTta, DeltaPeakStaysInPlace) {
  Plane x(9, 9, 0.0);
  x(2, 6) = 1.0;
  const SegPredictor threshold = [](const Plane& p) {
    Plane out(p.width(), p.height());
    for (std::size_t i = 0; i < p.size(); ++i) out.values()[i] = p.values()[i] > 0.5 ? 1.0 : 0.0;
    return SoftMaskSet({out, out, out});
  };
  const auto s = tta_rotate_seg(threshold, x);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) EXPECT_EQ(s.channel(1)(r, c), (r == 2 && c == 6) ? 1.0 : 0.0);
}

TEST(RotateTta, RejectsNonSquareAndOddAngles) {
  EXPECT_THROW(tta_rotate_seg(oracle::max3_sigmoid, Plane(8, 9)), InputError);
  const std::array<int, 1> bad{45};
  EXPECT_THROW(tta_rotate_seg(oracle::max3_sigmoid, Plane(8, 8), bad), InputError);
}

TEST(Mpa, UnitScaleAndShape) {
  std::mt19937_64 rng(7);
  const Plane x = random_plane(rng, 12, 12);
  const std::array<double, 1> one{1.0};
  EXPECT_EQ(mpa_seg(oracle::max3_sigmoid, x, one), oracle::max3_sigmoid(x));
  const auto multi = mpa_seg(oracle::max3_sigmoid, x, kDefaultMpaScales);
  EXPECT_EQ(multi.width(), 12);
  EXPECT_EQ(multi.height(), 12);
  for (int c = 0; c < kNumLesions; ++c)
    for (double v : multi.channel(c).values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Mpa, ConstantImageWithScaleInvariantModel) {
  const Plane x(10, 10, 0.4);
  const SegPredictor pointwise = [](const Plane& p) {
    Plane out = p;
    for (double& v : out.values()) v = v * v;
    return SoftMaskSet({out, out, out});
  };
  const auto got = mpa_seg(pointwise, x, kDefaultMpaScales);
  for (int c = 0; c < kNumLesions; ++c)
    for (double v : got.channel(c).values()) EXPECT_NEAR(v, 0.16, 1e-12);
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("scarcekit_ens_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Checkpoint, BytesRoundTrip) {
  Rng rng(8);
  const Mlp m({5, 7, 3}, Head::kSoftmax, 0.2, rng);
  EXPECT_EQ(from_checkpoint_bytes(to_checkpoint_bytes(m)), m);
  auto bytes = to_checkpoint_bytes(m);
  bytes[0] = 'X';
  EXPECT_THROW(from_checkpoint_bytes(bytes), FormatError);
  bytes = to_checkpoint_bytes(m);
  bytes.pop_back();
  EXPECT_THROW(from_checkpoint_bytes(bytes), FormatError);
}

TEST(Manifest, EnsembleRoundTrip) {
  TempDir tmp;
  std::vector<Mlp> members;
  for (int k = 0; k < 3; ++k) {
    Rng rng(k);
    members.emplace_back(std::vector<int>{4, 6, 1}, Head::kScalar, 0.2, rng);
  }
  const Ensemble e{members, {10, 11, 12}};
  save_ensemble(tmp.path(), e, "m");
  const auto back = load_ensemble(tmp.path() / "m.json");
  EXPECT_EQ(back.members, e.members);
  EXPECT_EQ(back.seeds, e.seeds);
}

TEST(SegSystemTest, CombinesChannelsAndRoundTrips) {
  TempDir tmp;
  auto small = Mlp::zeros({SegFeatures::kChannels, kNumLesions}, Head::kPixelSigmoid, 0.0);
  small.layers()[0].bias = {2.0, -2.0, 1.0};
  auto np = Mlp::zeros({SegFeatures::kChannels, kNumLesions}, Head::kPixelSigmoid, 0.0);
  np.layers()[0].bias = {-5.0, 3.0, -5.0};
  const SegSystem s{{{small}, {0}}, {{np}, {0}}};
  const auto out = predict_seg_system(s, Plane(8, 8, 0.5));
  EXPECT_DOUBLE_EQ(out.channel(0)(3, 3), sigmoid(2.0));
  EXPECT_DOUBLE_EQ(out.channel(1)(3, 3), sigmoid(3.0));
  EXPECT_DOUBLE_EQ(out.channel(2)(3, 3), sigmoid(1.0));
  save_seg_system(tmp.path(), s);
  const auto back = load_seg_system(tmp.path());
  EXPECT_EQ(back.small.members, s.small.members);
  EXPECT_EQ(back.np.members, s.np.members);
}

TEST(SegSystemTest, ConfigSplitsLosses) {
  TrainConfig base;
  const auto cfg = seg_system_config(base, 5);
  EXPECT_EQ(cfg.small.aux, AuxLoss::kBce);
  EXPECT_EQ(cfg.np.aux, AuxLoss::kFocal);
  EXPECT_EQ(cfg.small.channels, kSmallLesionChannels);
  EXPECT_EQ(cfg.np.channels, kNpChannel);
  EXPECT_EQ(cfg.np_members, 5u);
  EXPECT_EQ(cfg.small_members, 1u);
}

}  // namespace
}  // namespace sk
