#include "scarcekit/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "scarcekit/postprocess.hpp"
#include "scarcekit/random.hpp"
#include "scarcekit/rpl.hpp"
#include "scarcekit/synth.hpp"

namespace sk {

Proportions task_proportions(Task task) {
  switch (task) {
    case Task::kGrading: return kGradingProportions;
    case Task::kQuality: return kQualityProportions;
    case Task::kSegmentation: break;
  }
  throw InputError("segmentation has no class proportions");
}

TabularPools make_tabular_pools(const RunConfig& cfg, std::uint64_t seed) {
  const auto& s = cfg.synth;
  const std::size_t pool = s.labeled + s.unlabeled;
  if (s.labeled == 0 || s.dev == 0) throw ConfigError("synth.labeled and synth.dev must be > 0");
  OrdinalSpec spec;
  spec.n = pool + s.dev;
  spec.proportions = task_proportions(cfg.task);
  spec.noise = s.noise;
  spec.dim = s.dim;
  spec.separation = s.separation;
  spec.seed = seed;
  spec.task = cfg.task;
  const auto all = gen_ordinal_dataset(spec);
  auto [train, dev] = split_train_dev(all, static_cast<double>(pool) / static_cast<double>(spec.n),
                                      derive_seed(seed, {0xDE5}));
  TabularPools out;
  out.dev = std::move(dev);
  if (s.unlabeled == 0) {
    out.labeled = std::move(train);
    out.unlabeled = TabularDataset{cfg.task, s.dim, {}};
    return out;
  }
  auto [labeled, unlabeled] = split_train_dev(train, static_cast<double>(s.labeled) / static_cast<double>(pool),
                                              derive_seed(seed, {0x1AB}));
  out.labeled = std::move(labeled);
  out.unlabeled = unlabeled.unlabeled();
  return out;
}

SegPools make_seg_pools(const RunConfig& cfg, std::uint64_t seed) {
  const auto& s = cfg.synth;
  if (s.seg_train == 0 || s.seg_dev == 0) throw ConfigError("synth.seg_train and synth.seg_dev must be > 0");
  SegSpec spec;
  spec.n = s.seg_train + s.seg_dev;
  spec.size = s.image_size;
  spec.seed = seed;
  spec.artifact_fraction = s.artifact_fraction;
  auto [train, dev] = split_train_dev(gen_seg_dataset(spec),
                                      static_cast<double>(s.seg_train) / static_cast<double>(spec.n),
                                      derive_seed(seed, {0xDE5}));
  return {std::move(train), std::move(dev)};
}

Ensemble first_member(const Ensemble& e) {
  e.validate();
  return Ensemble{{e.members.front()}, {e.seeds.front()}};
}

TabularPrediction predict_tabular_pipeline(const Ensemble& e, std::span<const double> features,
                                           const TabularInference& inf) {
  TabularPrediction p;
  p.output = predict_tabular(e, features, inf.flip_tta);
  if (!inf.post) {
    p.label = decide_class(e.head(), p.output);
    return p;
  }
  double score = 0.0;
  if (e.head() == Head::kScalar) {
    score = p.output.at(0);
  } else {
    for (std::size_t k = 0; k < p.output.size(); ++k) score += static_cast<double>(k) * p.output[k];
  }
  p.label = post::quality_decision(score, inf.rule).value();
  return p;
}

SegPrediction predict_seg_pipeline(const SegSystem& s, const Plane& image, const SegInference& inf) {
  const SegPredictor base = [&](const Plane& x) { return predict_seg_system(s, x); };
  const SegPredictor aligned = [&](const Plane& x) {
    return inf.rotate_tta ? tta_rotate_seg(base, x, inf.rotations) : base(x);
  };
  SegPrediction out;
  out.soft = aligned(image);
  if (inf.mpa_nv) {
    constexpr int kNv = static_cast<int>(Lesion::kNv);
    out.soft.channel(kNv) = mpa_seg(aligned, image, inf.mpa_scales).channel(kNv);
  }
  out.masks = out.soft.binarize();
  if (inf.post) out.masks = post::postprocess_seg(out.soft, out.masks, inf.post_cfg);
  return out;
}

std::string describe(const TabularInference& inf, std::size_t members, Head head) {
  std::string s = "ensemble(K=" + std::to_string(members) + ") -> tta(" + (inf.flip_tta ? "flip" : "off") + ") -> ";
  if (inf.post) return s + "operating thresholds -> post(on)";
  return s + (head == Head::kScalar ? "round" : "argmax") + " -> post(off)";
}

std::string describe(const SegInference& inf, std::size_t np_members) {
  std::string s = "ensemble(NP K=" + std::to_string(np_members) + ") -> tta(";
  s += inf.rotate_tta ? "rotate" : "off";
  if (inf.mpa_nv) s += "+mpa:nv";
  s += ") -> binarize(0.5) -> post(";
  s += inf.post ? "reconcile=" + std::string(inf.post_cfg.reconcile ? "on" : "off") + ",np_dilation=" +
                      std::to_string(inf.post_cfg.np_dilation) +
                      (inf.post_cfg.reference_side > 0
                           ? " scaled from side " + std::to_string(inf.post_cfg.reference_side)
                           : std::string())
                : "off";
  return s + ")";
}

MetricsReport evaluate_tabular(const Ensemble& e, const TabularDataset& dev, const TabularInference& inf) {
  std::vector<int> truth, pred;
  std::vector<std::vector<double>> outputs;
  for (const auto& s : dev.samples) {
    if (!s.label) throw InputError("evaluation sample " + std::to_string(s.id) + " has no label");
    auto p = predict_tabular_pipeline(e, s.features, inf);
    truth.push_back(s.label->value());
    pred.push_back(p.label);
    outputs.push_back(std::move(p.output));
  }
  auto rep = evaluate_tabular(truth, pred, outputs);
  rep.task = dev.task;
  return rep;
}

MetricsReport evaluate_seg(const SegSystem& s, const SegDataset& dev, const SegInference& inf) {
  std::vector<MaskSet> pred, truth;
  for (const auto& smp : dev.samples) {
    if (!smp.masks) throw InputError("evaluation image " + std::to_string(smp.id) + " has no masks");
    pred.push_back(predict_seg_pipeline(s, smp.image.pixels(), inf).masks);
    truth.push_back(*smp.masks);
  }
  return evaluate_seg(pred, truth);
}

TabularInference tabular_inference(const RunConfig& cfg) {
  return {cfg.tta.flip, cfg.post.enabled, cfg.post.grade_rule};
}

SegInference seg_inference(const RunConfig& cfg) {
  SegInference inf;
  inf.rotate_tta = cfg.tta.rotate;
  inf.rotations = cfg.tta.rotations;
  inf.mpa_nv = cfg.tta.mpa;
  inf.mpa_scales = cfg.tta.mpa_scales;
  inf.post = cfg.post.enabled;
  inf.post_cfg = cfg.post.seg;
  return inf;
}

namespace {

ArmScore tabular_arm(std::string name, const Ensemble& e, const TabularDataset& dev, const TabularInference& inf) {
  const auto rep = evaluate_tabular(e, dev, inf);
  return {std::move(name),
          {{"qwk", rep.find("qwk")->value}, {"auc", rep.find("auc")->value}, {"accuracy", rep.find("accuracy")->value}}};
}

ArmScore seg_arm(std::string name, const SegSystem& s, const SegDataset& dev, const SegInference& inf) {
  const auto rep = evaluate_seg(s, dev, inf);
  return {std::move(name), {{"mean_dsc", rep.find("mean_dsc")->value}, {"mean_iou", rep.find("mean_iou")->value}}};
}

void note(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n';
}

}  // namespace

std::vector<ArmScore> ablate_tabular(const TabularPools& pools, const RunConfig& cfg, std::uint64_t seed,
                                     std::ostream* log) {
  const auto train = cfg.train_config(seed);
  const auto rpl = cfg.rpl_config(seed);
  TabularInference plain;
  plain.rule = cfg.post.grade_rule;

  note(log, "seed " + std::to_string(seed) + ": supervised ensemble");
  const Ensemble ensemble = train_deep_ensemble(pools.labeled, train, cfg.head, cfg.shape, cfg.members, seed);
  note(log, "seed " + std::to_string(seed) + ": naive pseudo labeling");
  const Ensemble pl = naive_pl_train(pools.labeled, pools.unlabeled, rpl).model;
  note(log, "seed " + std::to_string(seed) + ": reliable pseudo labeling");
  const Ensemble reliable = rpl_train(pools.labeled, pools.unlabeled, rpl).model;

  TabularInference tta = plain;
  tta.flip_tta = true;
  TabularInference post = tta;
  post.post = true;
  return {tabular_arm("baseline", first_member(ensemble), pools.dev, plain),
          tabular_arm("+ensemble", ensemble, pools.dev, plain),
          tabular_arm("+PL", pl, pools.dev, plain),
          tabular_arm("+RPL", reliable, pools.dev, plain),
          tabular_arm("+TTA", reliable, pools.dev, tta),
          tabular_arm("+post", reliable, pools.dev, post)};
}

std::vector<ArmScore> ablate_seg(const SegPools& pools, const RunConfig& cfg, std::uint64_t seed, std::ostream* log) {
  note(log, "seed " + std::to_string(seed) + ": segmentation models");
  const auto pipeline = aug::build_pipeline(Task::kSegmentation);
  const SegSystem full = train_seg_system(pools.train, seg_system_config(cfg.train_config(seed), cfg.members), seed,
                                          cfg.augment ? &pipeline : nullptr);
  const SegSystem single{full.small, first_member(full.np)};
  SegInference plain;
  plain.post_cfg = cfg.post.seg;
  plain.rotations = cfg.tta.rotations;
  plain.mpa_scales = cfg.tta.mpa_scales;
  SegInference tta = plain;
  tta.rotate_tta = true;
  tta.mpa_nv = cfg.tta.mpa;
  SegInference post = tta;
  post.post = true;
  return {seg_arm("baseline", single, pools.dev, plain), seg_arm("+ensemble", full, pools.dev, plain),
          seg_arm("+TTA", full, pools.dev, tta), seg_arm("+post", full, pools.dev, post)};
}

std::string ablation_table(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, std::ostream* log) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  std::vector<std::vector<ArmScore>> runs;
  for (const auto seed : seeds) {
    if (cfg.task == Task::kSegmentation)
      runs.push_back(ablate_seg(make_seg_pools(cfg, seed), cfg, seed, log));
    else
      runs.push_back(ablate_tabular(make_tabular_pools(cfg, seed), cfg, seed, log));
  }
  const auto& first = runs.front();
  std::string out = "arm";
  for (const auto& [metric, value] : first.front().metrics) out += "," + metric + "_mean," + metric + "_std";
  out += ",seeds\n";
  const double n = static_cast<double>(runs.size());
  char buf[64];
  for (std::size_t a = 0; a < first.size(); ++a) {
    out += first[a].arm;
    for (std::size_t m = 0; m < first[a].metrics.size(); ++m) {
      double sum = 0.0;
      for (const auto& r : runs) sum += r[a].metrics[m].second;
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& r : runs) ss += (r[a].metrics[m].second - mean) * (r[a].metrics[m].second - mean);
      const double sd = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", mean, sd);
      out += buf;
    }
    out += "," + std::to_string(runs.size()) + "\n";
  }
  return out;
}

}  // namespace sk
