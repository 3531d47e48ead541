#include "scarcekit/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "scarcekit/geometry.hpp"
#include "scarcekit/synth.hpp"

namespace sk {

Head Ensemble::head() const {
  if (members.empty()) throw InputError("empty ensemble");
  return members.front().head();
}

void Ensemble::validate() const {
  if (members.empty()) throw InputError("an ensemble needs at least one member");
  if (seeds.size() != members.size()) throw InputError("ensemble seed count does not match members");
  for (const auto& m : members)
    if (m.head() != members.front().head() || m.input_dim() != members.front().input_dim() ||
        m.output_dim() != members.front().output_dim())
      throw InputError("ensemble members differ in head or shape");
}

double aggregate_mean(std::span<const double> values) {
  if (values.empty()) throw InputError("mean of no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double offset = 0.0;
  for (double x : v) offset += x - v.front();
  return std::clamp(v.front() + offset / static_cast<double>(v.size()), v.front(), v.back());
}

std::vector<double> aggregate_vectors(const std::vector<std::vector<double>>& outputs) {
  if (outputs.empty()) throw InputError("mean of no predictions");
  const std::size_t n = outputs.front().size();
  std::vector<double> out(n), column(outputs.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].size() != n) throw InputError("predictions differ in length");
      column[i] = outputs[i][j];
    }
    out[j] = aggregate_mean(column);
  }
  return out;
}

SoftMaskSet aggregate_masks(const std::vector<SoftMaskSet>& masks) {
  if (masks.empty()) throw InputError("mean of no masks");
  const int w = masks.front().width(), h = masks.front().height();
  std::array<Plane, kNumLesions> out;
  std::vector<double> column(masks.size());
  for (int c = 0; c < kNumLesions; ++c) {
    out[c] = Plane(w, h);
    for (std::size_t p = 0; p < out[c].size(); ++p) {
      for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].width() != w || masks[i].height() != h) throw InputError("masks differ in shape");
        column[i] = masks[i].channel(c).values()[p];
      }
      out[c].values()[p] = aggregate_mean(column);
    }
  }
  return SoftMaskSet(std::move(out));
}

Ensemble train_deep_ensemble(const TabularDataset& data, const TrainConfig& cfg, Head head,
                             const ModelShape& shape, std::size_t k, std::uint64_t base_seed) {
  if (k < 1) throw InputError("ensemble size must be >= 1");
  Ensemble e;
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t seed = base_seed + i;
    Mlp init = head == Head::kSoftmax ? make_classifier(data.dim, shape, seed)
                                      : make_regressor(data.dim, shape, seed);
    TrainConfig member_cfg = cfg;
    member_cfg.seed = seed;
    try {
      e.members.push_back(train(std::move(init), data, member_cfg).model);
    } catch (const TrainingDiverged& err) {
      throw TrainingDiverged(err.epoch(), "ensemble member " + std::to_string(i));
    }
    e.seeds.push_back(seed);
  }
  return e;
}

Ensemble train_deep_ensemble(const SegDataset& data, const TrainConfig& cfg, std::size_t k,
                             std::uint64_t base_seed, const aug::AugPipeline* aug) {
  if (k < 1) throw InputError("ensemble size must be >= 1");
  Ensemble e;
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t seed = base_seed + i;
    TrainConfig member_cfg = cfg;
    member_cfg.seed = seed;
    try {
      e.members.push_back(train(make_segmenter(seed), data, member_cfg, aug).model);
    } catch (const TrainingDiverged& err) {
      throw TrainingDiverged(err.epoch(), "ensemble member " + std::to_string(i));
    }
    e.seeds.push_back(seed);
  }
  return e;
}

SegSystemConfig seg_system_config(const TrainConfig& base, std::size_t np_members, std::size_t small_members) {
  SegSystemConfig cfg;
  cfg.small = base;
  cfg.small.aux = AuxLoss::kBce;
  cfg.small.channels = kSmallLesionChannels;
  cfg.np = base;
  cfg.np.aux = AuxLoss::kFocal;
  cfg.np.channels = kNpChannel;
  cfg.small_members = small_members;
  cfg.np_members = np_members;
  return cfg;
}

SegSystem train_seg_system(const SegDataset& data, const SegSystemConfig& cfg, std::uint64_t base_seed,
                           const aug::AugPipeline* aug) {
  SegSystem s;
  s.small = train_deep_ensemble(data, cfg.small, cfg.small_members, base_seed, aug);
  s.np = train_deep_ensemble(data, cfg.np, cfg.np_members, base_seed, aug);
  return s;
}

SoftMaskSet predict_seg_system(const SegSystem& s, const Plane& image) {
  const SoftMaskSet small = ensemble_predict_seg(s.small, image);
  const SoftMaskSet np = ensemble_predict_seg(s.np, image);
  return SoftMaskSet(std::array<Plane, kNumLesions>{small.channel(0), np.channel(1), small.channel(2)});
}

std::vector<double> ensemble_predict(const Ensemble& e, std::span<const double> x) {
  if (e.members.empty()) throw InputError("empty ensemble");
  std::vector<std::vector<double>> outs;
  outs.reserve(e.size());
  for (const auto& m : e.members) outs.push_back(m.forward(x));
  return aggregate_vectors(outs);
}

std::vector<double> ensemble_variance(const Ensemble& e, std::span<const double> x) {
  const auto mean = ensemble_predict(e, x);
  std::vector<double> var(mean.size(), 0.0);
  for (const auto& m : e.members) {
    const auto y = m.forward(x);
    for (std::size_t j = 0; j < y.size(); ++j) var[j] += (y[j] - mean[j]) * (y[j] - mean[j]);
  }
  for (double& v : var) v /= static_cast<double>(e.size());
  return var;
}

SoftMaskSet ensemble_predict_seg(const Ensemble& e, const Plane& image) {
  if (e.members.empty()) throw InputError("empty ensemble");
  if (e.size() == 1) return predict_seg(e.members.front(), image);
  std::vector<SoftMaskSet> outs;
  outs.reserve(e.size());
  for (const auto& m : e.members) outs.push_back(predict_seg(m, image));
  return aggregate_masks(outs);
}

std::vector<double> tta_flip_predict(const PlanePredictor& predict, const Plane& x) {
  return aggregate_vectors({predict(x), predict(geom::flip_horizontal(x)), predict(geom::flip_vertical(x))});
}

std::vector<double> tta_flip_predict(const Ensemble& e, std::span<const double> features) {
  const auto grid = feature_grid(features.size());
  const Plane x(grid.cols, grid.rows, std::vector<double>(features.begin(), features.end()));
  return tta_flip_predict([&](const Plane& p) { return ensemble_predict(e, p.values()); }, x);
}

SoftMaskSet tta_rotate_seg(const SegPredictor& predict, const Plane& x, std::span<const int> angles_deg) {
  if (x.width() != x.height()) throw InputError("rotation TTA needs a square image");
  if (angles_deg.empty()) throw InputError("rotation TTA needs at least one angle");
  std::vector<SoftMaskSet> aligned;
  for (int angle : angles_deg) {
    if (angle % 90 != 0) throw InputError("rotation TTA angles must be multiples of 90");
    const int turns = angle / 90;
    const SoftMaskSet pred = predict(geom::rotate90(x, turns));
    std::array<Plane, kNumLesions> back;
    for (int c = 0; c < kNumLesions; ++c) back[c] = geom::rotate90(pred.channel(c), -turns);
    aligned.emplace_back(std::move(back));
  }
  return aligned.size() == 1 ? aligned.front() : aggregate_masks(aligned);
}

SoftMaskSet mpa_seg(const SegPredictor& predict, const Plane& x, std::span<const double> scales) {
  if (scales.empty()) throw InputError("multi-scale aggregation needs at least one scale");
  std::vector<SoftMaskSet> aligned;
  for (double s : scales) {
    if (!(s >= 1.0)) throw InputError("multi-scale aggregation scales must be >= 1");
    const int w = static_cast<int>(std::lround(x.width() * s));
    const int h = static_cast<int>(std::lround(x.height() * s));
    const SoftMaskSet pred = predict(geom::resize_bilinear(x, w, h));
    std::array<Plane, kNumLesions> back;
    for (int c = 0; c < kNumLesions; ++c) {
      back[c] = geom::resize_bilinear(pred.channel(c), x.width(), x.height());
      for (double& v : back[c].values()) v = std::clamp(v, 0.0, 1.0);
    }
    aligned.emplace_back(std::move(back));
  }
  return aligned.size() == 1 ? aligned.front() : aggregate_masks(aligned);
}

std::vector<double> predict_tabular(const Ensemble& e, std::span<const double> features, bool flip_tta) {
  return flip_tta ? tta_flip_predict(e, features) : ensemble_predict(e, features);
}

void save_ensemble(const std::filesystem::path& dir, const Ensemble& e, const std::string& stem) {
  e.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "scarcekit-ensemble";
  manifest["version"] = 1;
  manifest["head"] = std::string(to_string(e.head()));
  manifest["members"] = nlohmann::json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string name = stem + "_" + std::to_string(i) + ".skl";
    save_checkpoint(dir / name, e.members[i]);
    manifest["members"].push_back({{"path", name}, {"seed", e.seeds[i]}});
  }
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw FormatError("cannot write ensemble manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Ensemble load_ensemble(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& err) {
    throw FormatError(manifest_path.string() + ": " + err.what());
  }
  if (manifest.value("format", "") != "scarcekit-ensemble" || manifest.value("version", 0) != 1)
    throw FormatError(manifest_path.string() + ": not a version-1 ensemble manifest");
  Ensemble e;
  const auto base = manifest_path.parent_path();
  for (const auto& m : manifest.at("members")) {
    e.members.push_back(load_checkpoint(base / m.at("path").get<std::string>()));
    e.seeds.push_back(m.at("seed").get<std::uint64_t>());
  }
  e.validate();
  if (std::string(to_string(e.head())) != manifest.value("head", ""))
    throw FormatError(manifest_path.string() + ": manifest head does not match checkpoints");
  return e;
}

}  // namespace sk

namespace sk {

void save_seg_system(const std::filesystem::path& dir, const SegSystem& s) {
  save_ensemble(dir, s.small, "seg_small");
  save_ensemble(dir, s.np, "seg_np");
}

SegSystem load_seg_system(const std::filesystem::path& dir) {
  SegSystem s{load_ensemble(dir / "seg_small.json"), load_ensemble(dir / "seg_np.json")};
  if (s.small.head() != Head::kPixelSigmoid || s.np.head() != Head::kPixelSigmoid)
    throw FormatError("segmentation manifests in " + dir.string() + " hold non-segmenter models");
  return s;
}

}  // namespace sk
