#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "scarcekit/cli.hpp"
#include "scarcekit/ensemble.hpp"
#include "scarcekit/losses.hpp"
#include "scarcekit/metrics.hpp"
#include "scarcekit/postprocess.hpp"
#include "scarcekit/rpl.hpp"
#include "scarcekit/synth.hpp"
#include "support/equivariant.hpp"
#include "support/oracles.hpp"

namespace {

using namespace sk;
namespace fs = std::filesystem;

constexpr double kLossExampleTol = 1e-6;
constexpr double kGradientRelTol = 1e-4;
constexpr double kLossSeconds = 10.0;
constexpr double kMetricTol = 1e-9;
constexpr double kRplMargin = 0.02;
constexpr double kSupervisedQwkLow = 0.5;
constexpr double kSupervisedQwkHigh = 0.8;
constexpr double kRplSeconds = 300.0;
constexpr int kOrderingSeeds = 20;
constexpr int kSegSeeds = 10;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

MaskSet filled(int w, int h, std::uint8_t v) {
  MaskSet m(w, h);
  for (int c = 0; c < kNumLesions; ++c)
    for (auto& p : m.channel(c).values()) p = v;
  return m;
}

using SegLossFn = std::function<SegLoss(const MaskSet&, const SoftMaskSet&)>;

double worst_seg_gradient_error(const SegLossFn& loss, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    const auto y = oracle::random_masks(rng, 5, 4, 0.35);
    auto yhat = oracle::random_soft(rng, 5, 4, 0.05, 0.95);
    const auto analytic = loss(y, yhat);
    const int c = std::uniform_int_distribution<int>(0, kNumLesions - 1)(rng);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, 19)(rng);
    auto& v = yhat.channel(c).values()[i];
    const double x0 = v;
    v = x0 + 1e-4;
    const double up = loss(y, yhat).value;
    v = x0 - 1e-4;
    const double down = loss(y, yhat).value;
    worst = std::max(worst, oracle::rel_error(analytic.grad[c].values()[i], (up - down) / 2e-4));
  }
  return worst;
}

Outcome loss_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const auto near = [&](double got, double want, const char* what) {
    o.require(std::abs(got - want) <= kLossExampleTol, std::string(what) + fmt(" got %.9g want %.9g", got, want));
  };
  const double ln2 = std::numbers::ln2;
  near(focal_loss(filled(2, 2, 1), SoftMaskSet(2, 2, 0.5)).value, 0.5 * ln2, "focal y=1 p=0.5");
  near(focal_loss(filled(2, 2, 0), SoftMaskSet(2, 2, 0.9)).value, -0.9 * std::log(0.1), "focal y=0 p=0.9");
  near(bce_loss(filled(2, 2, 1), SoftMaskSet(2, 2, 0.5)).value, ln2, "bce y=1 p=0.5");
  near(bce_loss(filled(2, 2, 0), SoftMaskSet(2, 2, 0.9)).value, -std::log(0.1), "bce y=0 p=0.9");
  near(smooth_l1(0.0, 0.0).value, 0.0, "smooth_l1 d=0");
  near(smooth_l1(1.5, 1.0).value, 0.125, "smooth_l1 d=0.5");
  near(smooth_l1(3.0, 1.0).value, 1.5, "smooth_l1 d=2");

  {
    std::mt19937_64 rng(3);
    const auto y = oracle::random_masks(rng, 8, 8, 0.3);
    SoftMaskSet same(8, 8);
    for (int c = 0; c < kNumLesions; ++c)
      for (std::size_t i = 0; i < y.channel(c).size(); ++i) same.channel(c).values()[i] = y.channel(c).values()[i];
    near(weighted_dice_loss(y, same).value, 0.0, "dice perfect overlap");
    MaskSet a(4, 4);
    SoftMaskSet b(4, 4);
    for (int c = 0; c < kNumLesions; ++c) {
      a.channel(c)(0, 0) = 1;
      b.channel(c)(3, 3) = 1.0;
    }
    near(weighted_dice_loss(a, b).value, 1.0, "dice disjoint");
  }
  {
    std::mt19937_64 rng(5);
    const auto y = oracle::random_masks(rng, 6, 6, 0.3);
    const auto p = oracle::random_soft(rng, 6, 6, 0.05, 0.95);
    const double dice = weighted_dice_loss(y, p).value;
    near(seg_total_loss(y, p, AuxLoss::kFocal, 0.0).value, dice, "total alpha=0");
    near(seg_total_loss(y, p, AuxLoss::kFocal, 0.5).value, dice + 0.5 * focal_loss(y, p).value, "total focal linear");
    near(seg_total_loss(y, p, AuxLoss::kBce, 0.5).value, dice + 0.5 * bce_loss(y, p).value, "total bce linear");
  }
  const auto w = class_weights(MaskSet(64, 64));
  near(w[0], std::log(4096.0), "class weight empty 64x64");
  const auto probs = softmax(std::vector<double>{ln2, 0.0, 0.0});
  near(probs[0], 0.5, "softmax (ln2,0,0)[0]");
  near(probs[1], 0.25, "softmax (ln2,0,0)[1]");

  double worst = 0.0;
  worst = std::max(worst, worst_seg_gradient_error([](auto& y, auto& p) { return weighted_dice_loss(y, p); }, 21));
  worst = std::max(worst, worst_seg_gradient_error([](auto& y, auto& p) { return focal_loss(y, p); }, 22));
  worst = std::max(worst, worst_seg_gradient_error([](auto& y, auto& p) { return bce_loss(y, p); }, 23));
  worst = std::max(worst, worst_seg_gradient_error(
                              [](auto& y, auto& p) { return seg_total_loss(y, p, AuxLoss::kFocal, 0.5); }, 24));
  worst = std::max(worst, worst_seg_gradient_error(
                              [](auto& y, auto& p) { return seg_total_loss(y, p, AuxLoss::kBce, 0.5); }, 25));
  {
    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int point = 0; point < 100; ++point) {
      const double target = u(rng);
      double pred = u(rng);
      if (std::abs(std::abs(pred - target) - 1.0) < 1e-3) pred += 0.01;
      const double numeric = (smooth_l1(pred + 1e-4, target).value - smooth_l1(pred - 1e-4, target).value) / 2e-4;
      worst = std::max(worst, oracle::rel_error(smooth_l1(pred, target).grad, numeric));
    }
    for (int point = 0; point < 100; ++point) {
      std::vector<double> logits{u(rng), u(rng), u(rng)};
      const int label = point % kNumGrades;
      const std::size_t k = static_cast<std::size_t>(point / 3 % 3);
      const double numeric = oracle::central_difference(
          [&](std::vector<double>& z) { return softmax_cross_entropy(z, label).value; }, logits, k);
      worst = std::max(worst, oracle::rel_error(softmax_cross_entropy(logits, label).grad[k], numeric));
    }
  }
  o.require(worst < kGradientRelTol, fmt("worst gradient relative error %.3g", worst));
  const double sec = seconds_since(t0);
  o.require(sec < kLossSeconds, fmt("took %.1f s", sec));
  if (o.pass) o.detail = fmt("worst gradient rel error %.2g, %.2f s", worst, sec);
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = oracle::random_binary(rng, 9, 7, (trial % 10) / 10.0);
    const auto g = oracle::random_binary(rng, 9, 7, 0.3);
    o.require(std::abs(dsc(p, g) - oracle::dice(p, g)) <= kMetricTol, "dsc mismatch");
    o.require(std::abs(iou(p, g) - oracle::jaccard(p, g)) <= kMetricTol, "iou mismatch");
  }
  std::uniform_int_distribution<std::uint64_t> cell(0, 12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint64_t> counts(9);
    for (auto& c : counts) c = cell(rng);
    counts[trial % 9] += 1;
    counts[(trial + 4) % 9] += 1;
    std::vector<int> t, p;
    oracle::expand(counts, 3, t, p);
    o.require(std::abs(qwk(ConfusionMatrix(3, counts)) - oracle::kappa(t, p)) <= kMetricTol, "qwk mismatch");
  }
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 50)(rng);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> pos(n);
    std::uniform_int_distribution<int> level(0, 9);
    for (int i = 0; i < n; ++i) {
      scores[i] = level(rng) / 10.0;
      pos[i] = static_cast<std::uint8_t>(i % 2 == 0 ? 1 : level(rng) % 2);
    }
    pos[1] = 0;
    o.require(binary_auc(scores, pos) == oracle::pairwise_auc(scores, pos), "auc mismatch");
  }
  if (o.pass) o.detail = "200 dsc/iou, 200 qwk, 100 auc";
  return o;
}

double dev_qwk(const Ensemble& e, const TabularDataset& dev) {
  std::vector<int> truth, pred;
  for (const auto& s : dev.samples) {
    truth.push_back(s.label->value());
    pred.push_back(decide_class(e.head(), predict_tabular(e, s.features, false)));
  }
  return qwk(ConfusionMatrix::from(truth, pred));
}

struct OrderingMeans {
  double supervised = 0, ensemble = 0, naive = 0, rpl = 0, seconds = 0;
};

OrderingMeans run_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  OrderingMeans m;
  for (int seed = 0; seed < kOrderingSeeds; ++seed) {
    OrdinalSpec spec;
    spec.n = 960;
    spec.dim = 8;
    spec.noise = 1.0;
    spec.separation = 2.0;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto all = gen_ordinal_dataset(spec);
    const auto [pool, dev] = split_train_dev(all, 660.0 / 960.0, spec.seed);
    auto [labeled, unlabeled] = split_train_dev(pool, 60.0 / 660.0, spec.seed + 1000);
    unlabeled = unlabeled.unlabeled();

    RplConfig cfg;
    cfg.head = Head::kScalar;
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 50;
    cfg.train.batch_size = 8;
    cfg.train.seed = spec.seed;
    cfg.shape.hidden = 32;
    cfg.rounds = 5;
    cfg.members = 1;

    m.supervised += dev_qwk(train_deep_ensemble(labeled, cfg.train, cfg.head, cfg.shape, 1, spec.seed), dev);
    m.ensemble += dev_qwk(train_deep_ensemble(labeled, cfg.train, cfg.head, cfg.shape, 5, spec.seed), dev);
    m.naive += dev_qwk(naive_pl_train(labeled, unlabeled, cfg).model, dev);
    m.rpl += dev_qwk(rpl_train(labeled, unlabeled, cfg).model, dev);
  }
  for (double* v : {&m.supervised, &m.ensemble, &m.naive, &m.rpl}) *v /= kOrderingSeeds;
  m.seconds = seconds_since(t0);
  return m;
}

Outcome rpl_ordering(const OrderingMeans& m) {
  Outcome o;
  o.require(m.supervised >= kSupervisedQwkLow && m.supervised <= kSupervisedQwkHigh,
            fmt("supervised QWK %.4f outside band", m.supervised));
  o.require(m.rpl >= m.naive, fmt("RPL %.4f < PL %.4f", m.rpl, m.naive));
  o.require(m.rpl - m.supervised >= kRplMargin, fmt("RPL %.4f - sup %.4f below margin", m.rpl, m.supervised));
  o.require(m.seconds < kRplSeconds, fmt("took %.1f s", m.seconds));
  if (o.pass) o.detail = fmt("sup %.4f PL %.4f RPL %.4f, %.1f s", m.supervised, m.naive, m.rpl, m.seconds);
  return o;
}

Outcome ensemble_gain(const OrderingMeans& m) {
  Outcome o;
  o.require(m.ensemble >= m.supervised, fmt("ensemble %.4f < single %.4f", m.ensemble, m.supervised));
  if (o.pass) o.detail = fmt("single %.4f ensemble %.4f", m.supervised, m.ensemble);
  return o;
}

Outcome tta_alignment() {
  Outcome o;
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int side = 5 + trial % 12;
    Plane x(side, side);
    for (auto& v : x.values()) v = u(rng);
    const auto plain = oracle::max3_sigmoid(x);
    const auto tta = tta_rotate_seg(oracle::max3_sigmoid, x);
    for (int c = 0; c < kNumLesions; ++c)
      o.require(std::ranges::equal(tta.channel(c).values(), plain.channel(c).values()), fmt("image %g differs", trial));
  }
  if (o.pass) o.detail = "20 images exact";
  return o;
}

Outcome postprocess_rules() {
  Outcome o;
  o.require(post::quality_decision(0.53).value() == 0, "0.53");
  o.require(post::quality_decision(0.54).value() == 1, "0.54");
  o.require(post::quality_decision(1.49).value() == 1, "1.49");
  o.require(post::quality_decision(1.5).value() == 2, "1.5");

  const auto masks = [](int irma, int np, int nv) {
    MaskSet m(8, 8);
    for (int i = 0; i < irma; ++i) m.channel(0).values()[i] = 1;
    for (int i = 0; i < np; ++i) m.channel(1).values()[10 + i] = 1;
    for (int i = 0; i < nv; ++i) m.channel(2).values()[30 + i] = 1;
    return m;
  };
  for (int g = 0; g < kNumGrades; ++g) {
    const OrdinalLabel grade(g);
    o.require(post::grade_postedit(grade, masks(0, 0, 1)).value() == 2, "NV alone -> PDR");
    o.require(post::grade_postedit(grade, masks(2, 3, 4)).value() == 2, "NV with others -> PDR");
    o.require(post::grade_postedit(grade, masks(0, 0, 0)).value() == 0, "empty -> normal");
    o.require(post::grade_postedit(grade, masks(1, 0, 0)).value() == g, "IRMA only unchanged");
    o.require(post::grade_postedit(grade, masks(0, 5, 0)).value() == g, "NP only unchanged");
    o.require(post::grade_postedit(grade, masks(3, 2, 0)).value() == g, "IRMA and NP unchanged");
  }

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto soft = oracle::random_soft(rng, 10, 10);
    const auto out = post::reconcile_irma_nv(soft, oracle::random_masks(rng, 10, 10, 0.5));
    for (std::size_t i = 0; i < out.channel(0).size(); ++i)
      o.require(!(out.channel(0).values()[i] && out.channel(2).values()[i]), "IRMA and NV overlap");
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = oracle::random_binary(rng, 13, 11, 0.05 + 0.01 * trial);
    for (int k : {1, 3, 5}) o.require(post::dilate(m, k) == oracle::max_filter(m, k), fmt("dilate k=%g", k));
  }
  if (o.pass) o.detail = "decision table, post-edit, 100 reconcile, 150 dilations";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome ablate_determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "scarcekit_acceptance_ablate";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "[run]\ntask = quality\nseeds = 3,4\n[train]\nepochs = 30\nlearning_rate = 1e-3\n";
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("run" + std::to_string(i));
    std::ostringstream sink, log;
    const int code = cli::run({"ablate", "--config", (dir / "run.cfg").string(), "--out", out.string()}, sink, log);
    o.require(code == 0, "ablate exited " + std::to_string(code) + ": " + log.str());
    csv[i] = slurp(out / "ablation.csv");
  }
  o.require(!csv[0].empty(), "empty ablation.csv");
  o.require(csv[0] == csv[1], "ablation.csv differs between runs");
  fs::remove_all(dir);
  if (o.pass) o.detail = "two runs byte-identical";
  return o;
}

Outcome segmentation_smoke() {
  const auto t0 = std::chrono::steady_clock::now();
  double raw_sum = 0.0, full_sum = 0.0;
  for (int seed = 0; seed < kSegSeeds; ++seed) {
    SegSpec spec;
    spec.n = 50;
    spec.size = 64;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto [train, dev] = split_train_dev(gen_seg_dataset(spec), 0.8, spec.seed);

    TrainConfig base;
    base.learning_rate = 1e-2;
    base.epochs = 100;
    base.batch_size = 2;
    base.seed = spec.seed;
    const auto system = train_seg_system(train, seg_system_config(base, 5), spec.seed);
    // Member 0 of the NP ensemble is the model a single-member run trains.
    SegSystem single{system.small, {{system.np.members.front()}, {system.np.seeds.front()}}};

    double raw = 0.0, full = 0.0;
    for (const auto& s : dev.samples) {
      const Plane& x = s.image.pixels();
      raw += mean_dsc(predict_seg_system(single, x).binarize(), *s.masks);
      const auto soft = tta_rotate_seg([&](const Plane& p) { return predict_seg_system(system, p); }, x);
      full += mean_dsc(post::postprocess_seg(soft, soft.binarize()), *s.masks);
    }
    raw_sum += raw / static_cast<double>(dev.size());
    full_sum += full / static_cast<double>(dev.size());
  }
  const double raw = raw_sum / kSegSeeds, full = full_sum / kSegSeeds;
  Outcome o;
  o.require(full >= raw, fmt("full %.4f < raw %.4f", full, raw));
  o.detail = fmt("raw %.5f full %.5f, %.0f s", raw, full, seconds_since(t0));
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d %-24s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  const auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };
  report(1, "loss-correctness", guarded(loss_correctness));
  report(2, "metric-oracles", guarded(metric_oracles));
  OrderingMeans means;
  bool ordering_ok = true;
  std::string ordering_error;
  try {
    means = run_ordering();
  } catch (const std::exception& e) {
    ordering_ok = false;
    ordering_error = std::string("exception: ") + e.what();
  }
  report(3, "rpl-ordering", ordering_ok ? rpl_ordering(means) : Outcome{false, ordering_error});
  report(4, "ensemble-gain", ordering_ok ? ensemble_gain(means) : Outcome{false, ordering_error});
  report(5, "tta-alignment", guarded(tta_alignment));
  report(6, "postprocess-rules", guarded(postprocess_rules));
  report(7, "ablate-determinism", guarded(ablate_determinism));
  report(8, "segmentation-smoke", guarded(segmentation_smoke));
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
