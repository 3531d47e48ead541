#include "scarcekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scarcekit/geometry.hpp"

namespace sk {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw InputError("weight decay must be >= 0");
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(alpha >= 0.0)) throw InputError("alpha must be >= 0");
}

Mlp make_classifier(std::size_t dim, const ModelShape& shape, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x1A17}));
  return Mlp({static_cast<int>(dim), shape.hidden, kNumGrades}, Head::kSoftmax, shape.dropout, rng);
}

Mlp make_regressor(std::size_t dim, const ModelShape& shape, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x1A17}));
  return Mlp({static_cast<int>(dim), shape.hidden, 1}, Head::kScalar, shape.dropout, rng);
}

Mlp make_segmenter(std::uint64_t seed, int hidden) {
  Rng rng(derive_seed(seed, {0x5E67}));
  if (hidden <= 0) return Mlp({SegFeatures::kChannels, kNumLesions}, Head::kPixelSigmoid, 0.0, rng);
  return Mlp({SegFeatures::kChannels, hidden, kNumLesions}, Head::kPixelSigmoid, 0.0, rng);
}

namespace {

// Maps [0, 1] intensities to [-4, 4] so the hidden ReLUs can resolve the
// narrow lesion intensity bands.
double standardize(double v) { return (v - 0.5) * 8.0; }

}  // namespace

SegFeatures::SegFeatures(const Plane& image)
    : width_(image.width()), height_(image.height()), values_(image.size() * kChannels) {
  std::array<Plane, kRadii.size()> means;
  for (std::size_t k = 0; k < kRadii.size(); ++k) means[k] = geom::box_mean(image, kRadii[k]);
  for (std::size_t i = 0; i < image.size(); ++i) {
    values_[i * kChannels] = standardize(image.values()[i]);
    for (std::size_t k = 0; k < kRadii.size(); ++k)
      values_[i * kChannels + 1 + k] = standardize(means[k].values()[i]);
  }
}

SoftMaskSet predict_seg(const Mlp& model, const Plane& image) {
  if (model.head() != Head::kPixelSigmoid || model.output_dim() != kNumLesions)
    throw InputError("segmentation needs a 3-channel pixel-sigmoid model");
  const SegFeatures f(image);
  std::array<Plane, kNumLesions> out;
  for (auto& p : out) p = Plane(image.width(), image.height());
  Mlp::Cache cache;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto z = model.forward_train(f.pixel(i), nullptr, cache);
    for (int c = 0; c < kNumLesions; ++c) out[c].values()[i] = sigmoid(z[c]);
  }
  return SoftMaskSet(std::move(out));
}

AdamW::AdamW(const Mlp& model, double learning_rate, double weight_decay)
    : lr_(learning_rate), wd_(weight_decay), m_(model.zero_gradients()), v_(model.zero_gradients()) {}

void AdamW::step(Mlp& model, const Gradients& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= 1.0 - lr_ * wd_;
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
  };
  auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, grads[l].weights, m_[l].weights, v_[l].weights);
    update(layers[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
  }
}

namespace {

void reset(Gradients& g) {
  for (auto& l : g) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

void scale(Gradients& g, double s) {
  for (auto& l : g) {
    for (double& w : l.weights) w *= s;
    for (double& b : l.bias) b *= s;
  }
}

}  // namespace

double tabular_batch_gradient(const Mlp& model, std::span<const TabularSample* const> batch,
                              Gradients& grads, Rng* rng) {
  if (model.head() == Head::kPixelSigmoid) throw InputError("tabular training needs a softmax or scalar head");
  reset(grads);
  Mlp::Cache cache;
  double total = 0.0;
  for (const auto* s : batch) {
    if (!s->label) throw InputError("training sample " + std::to_string(s->id) + " has no label");
    const auto z = model.forward_train(s->features, rng, cache);
    if (model.head() == Head::kSoftmax) {
      const auto l = softmax_cross_entropy(z, s->label->value());
      total += l.value;
      model.backward(cache, l.grad, grads);
    } else {
      const auto l = smooth_l1(z[0], static_cast<double>(s->label->value()));
      total += l.value;
      const double g = l.grad;
      model.backward(cache, std::span<const double>(&g, 1), grads);
    }
  }
  const double n = static_cast<double>(batch.size());
  scale(grads, 1.0 / n);
  return total / n;
}

double seg_batch_gradient(const Mlp& model, std::span<const Plane* const> images,
                          std::span<const MaskSet* const> masks, const TrainConfig& cfg,
                          Gradients& grads) {
  if (model.head() != Head::kPixelSigmoid) throw InputError("segmentation training needs a pixel-sigmoid head");
  reset(grads);
  Mlp::Cache cache;
  double total = 0.0;
  std::vector<double> gz(kNumLesions);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Plane& image = *images[b];
    const SegFeatures f(image);
    std::array<Plane, kNumLesions> soft;
    for (auto& p : soft) p = Plane(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i) {
      const auto z = model.forward_train(f.pixel(i), nullptr, cache);
      for (int c = 0; c < kNumLesions; ++c) soft[c].values()[i] = sigmoid(z[c]);
    }
    const SoftMaskSet yhat(std::move(soft));
    const auto loss = seg_total_loss(*masks[b], yhat, cfg.aux, cfg.alpha, cfg.channels);
    total += loss.value;
    for (std::size_t i = 0; i < image.size(); ++i) {
      model.forward_train(f.pixel(i), nullptr, cache);
      for (int c = 0; c < kNumLesions; ++c) {
        // Derivative at the clamped probability so saturated pixels keep a gradient.
        const double s = std::clamp(yhat.channel(c).values()[i], kProbEps, 1.0 - kProbEps);
        gz[c] = loss.grad[c].values()[i] * s * (1.0 - s);
      }
      model.backward(cache, gz, grads);
    }
  }
  const double n = static_cast<double>(images.size());
  scale(grads, 1.0 / n);
  return total / n;
}

TrainResult train(Mlp init, const TabularDataset& data, const TrainConfig& cfg) {
  TrainResult result{std::move(init), {}};
  std::vector<const TabularSample*> pool;
  for (const auto& s : data.samples)
    if (s.label) pool.push_back(&s);
  if (cfg.epochs == 0) return result;
  cfg.validate();
  if (pool.empty()) throw InputError("training set has no labeled samples");

  Rng rng(derive_seed(cfg.seed, {0x7EA1}));
  AdamW opt(result.model, cfg.learning_rate, cfg.weight_decay);
  Gradients grads = result.model.zero_gradients();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(pool.size(), start + cfg.batch_size);
      std::span<const TabularSample* const> batch(pool.data() + start, end - start);
      const double loss = tabular_batch_gradient(result.model, batch, grads, &rng);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
      epoch_loss += loss * static_cast<double>(batch.size());
      opt.step(result.model, grads);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(pool.size()));
    if (!result.model.all_finite()) throw TrainingDiverged(epoch, "non-finite parameters");
  }
  return result;
}

TrainResult train(Mlp init, const SegDataset& data, const TrainConfig& cfg, const aug::AugPipeline* aug) {
  TrainResult result{std::move(init), {}};
  std::vector<const SegSample*> pool;
  for (const auto& s : data.samples)
    if (s.masks) pool.push_back(&s);
  if (cfg.epochs == 0) return result;
  cfg.validate();
  if (pool.empty()) throw InputError("training set has no labeled images");

  Rng rng(derive_seed(cfg.seed, {0x7EA2}));
  AdamW opt(result.model, cfg.learning_rate, cfg.weight_decay);
  Gradients grads = result.model.zero_gradients();
  std::vector<aug::AugSample> augmented;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(pool.size(), start + cfg.batch_size);
      std::vector<const Plane*> images;
      std::vector<const MaskSet*> masks;
      augmented.clear();
      augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        if (aug) {
          augmented.push_back(aug::augment({pool[i]->image.pixels(), pool[i]->masks}, *aug, rng));
          images.push_back(&augmented.back().image);
          masks.push_back(&*augmented.back().masks);
        } else {
          images.push_back(&pool[i]->image.pixels());
          masks.push_back(&*pool[i]->masks);
        }
      }
      const double loss = seg_batch_gradient(result.model, images, masks, cfg, grads);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
      epoch_loss += loss * static_cast<double>(images.size());
      opt.step(result.model, grads);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(pool.size()));
    if (!result.model.all_finite()) throw TrainingDiverged(epoch, "non-finite parameters");
  }
  return result;
}

int regression_class(double raw) {
  const double r = std::round(raw);  // std::round rounds half away from zero
  return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(kNumGrades - 1)));
}

int decide_class(Head head, std::span<const double> output) {
  switch (head) {
    case Head::kSoftmax:
      return static_cast<int>(std::max_element(output.begin(), output.end()) - output.begin());
    case Head::kScalar:
      return regression_class(output[0]);
    case Head::kPixelSigmoid:
      break;
  }
  throw InputError("class decisions need a softmax or scalar head");
}

}  // namespace sk
