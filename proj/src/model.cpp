#include "scarcekit/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "scarcekit/errors.hpp"

namespace sk {

std::string_view to_string(Head h) {
  switch (h) {
    case Head::kSoftmax: return "softmax";
    case Head::kScalar: return "scalar";
    case Head::kPixelSigmoid: return "pixel-sigmoid";
  }
  return "?";
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (double& v : p) v /= sum;
  return p;
}

namespace {

std::vector<DenseLayer> shaped_layers(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InputError("an Mlp needs at least input and output sizes");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw InputError("layer sizes must be positive");
    DenseLayer l;
    l.in = sizes[i];
    l.out = sizes[i + 1];
    l.weights.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
    l.bias.assign(l.out, 0.0);
    layers.push_back(std::move(l));
  }
  return layers;
}

void check_head(Head head, int outputs) {
  if (head == Head::kScalar && outputs != 1) throw InputError("scalar head needs one output");
  if (head == Head::kSoftmax && outputs < 2) throw InputError("softmax head needs >= 2 outputs");
}

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& y) {
  y.resize(l.out);
  for (int o = 0; o < l.out; ++o) {
    const double* w = &l.weights[static_cast<std::size_t>(o) * l.in];
    double acc = l.bias[o];
    for (int i = 0; i < l.in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers, Head head, double dropout)
    : layers_(std::move(layers)), head_(head), dropout_(dropout) {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0,1)");
  check_head(head, output_dim());
}

Mlp::Mlp(std::vector<int> sizes, Head head, double dropout, Rng& rng)
    : Mlp(shaped_layers(sizes), head, dropout) {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto& l = layers_[li];
    const bool last = li + 1 == layers_.size();
    const double stddev = std::sqrt((last ? 1.0 : 2.0) / l.in);
    std::normal_distribution<double> gauss(0.0, stddev);
    for (double& w : l.weights) w = gauss(rng);
  }
}

Mlp Mlp::zeros(std::vector<int> sizes, Head head, double dropout) {
  return Mlp(shaped_layers(sizes), head, dropout);
}

void Mlp::check_input(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw InputError("input dimension " + std::to_string(x.size()) + " does not match model input " +
                     std::to_string(input_dim()));
}

std::vector<double> Mlp::logits(std::span<const double> x) const {
  check_input(x);
  std::vector<double> cur(x.begin(), x.end()), next;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    affine(layers_[li], cur, next);
    if (li + 1 < layers_.size())
      for (double& v : next) v = std::max(v, 0.0);
    std::swap(cur, next);
  }
  return cur;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  auto z = logits(x);
  switch (head_) {
    case Head::kSoftmax: return softmax(z);
    case Head::kScalar: return z;
    case Head::kPixelSigmoid:
      for (double& v : z) v = sigmoid(v);
      return z;
  }
  return z;
}

std::span<const double> Mlp::forward_train(std::span<const double> x, Rng* rng, Cache& cache) const {
  check_input(x);
  cache.activations.resize(layers_.size() + 1);
  cache.keep.resize(layers_.size());
  cache.activations[0].assign(x.begin(), x.end());
  const double scale = 1.0 / (1.0 - dropout_);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto& out = cache.activations[li + 1];
    affine(layers_[li], cache.activations[li], out);
    if (li + 1 < layers_.size()) {
      auto& keep = cache.keep[li];
      keep.assign(out.size(), 1.0);
      for (std::size_t j = 0; j < out.size(); ++j) {
        if (out[j] < 0.0) {
          out[j] = 0.0;
          keep[j] = 0.0;
        }
        if (rng && dropout_ > 0.0) {
          const double k = bernoulli(*rng, dropout_) ? 0.0 : scale;
          keep[j] *= k;
          out[j] *= k;
        }
      }
    }
  }
  return cache.activations.back();
}

void Mlp::backward(Cache& cache, std::span<const double> grad_logits, Gradients& grads) const {
  auto& delta = cache.delta;
  auto& prev = cache.prev;
  delta.assign(grad_logits.begin(), grad_logits.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    auto& g = grads[li];
    const auto& input = cache.activations[li];
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      g.bias[o] += d;
      double* gw = &g.weights[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) gw[i] += d * input[i];
    }
    if (li == 0) break;
    prev.assign(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = &l.weights[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) prev[i] += d * w[i];
    }
    // ReLU and dropout share one multiplicative mask.
    const auto& keep = cache.keep[li - 1];
    for (int i = 0; i < l.in; ++i) prev[i] *= keep[i];
    std::swap(delta, prev);
  }
}

Gradients Mlp::zero_gradients() const {
  Gradients g = layers_;
  for (auto& l : g) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return g;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    for (double w : l.weights)
      if (!std::isfinite(w)) return false;
    for (double b : l.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

namespace {

constexpr char kMagic[4] = {'S', 'K', 'L', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>)
    bits = std::bit_cast<std::uint64_t>(value);
  else
    bits = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>)
      return std::bit_cast<double>(bits);
    else
      return static_cast<T>(bits);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> to_checkpoint_bytes(const Mlp& m) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(m.head()));
  out.insert(out.end(), 3, 0);
  put_le(out, m.dropout());
  put_le(out, static_cast<std::uint32_t>(m.layers().size() + 1));
  put_le(out, static_cast<std::uint32_t>(m.input_dim()));
  for (const auto& l : m.layers()) put_le(out, static_cast<std::uint32_t>(l.out));
  for (const auto& l : m.layers()) {
    for (double w : l.weights) put_le(out, w);
    for (double b : l.bias) put_le(out, b);
  }
  return out;
}

Mlp from_checkpoint_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not a model checkpoint (bad magic)");
  Reader r(bytes.subspan(4));
  const auto head_byte = r.get<std::uint8_t>();
  if (head_byte > static_cast<std::uint8_t>(Head::kPixelSigmoid)) throw FormatError("unknown model head");
  for (int i = 0; i < 3; ++i) r.get<std::uint8_t>();
  const double dropout = r.get<double>();
  const auto count = r.get<std::uint32_t>();
  if (count < 2 || count > 64) throw FormatError("implausible layer count in checkpoint");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto s = r.get<std::uint32_t>();
    if (s == 0 || s > (1u << 20)) throw FormatError("implausible layer size in checkpoint");
    sizes.push_back(static_cast<int>(s));
  }
  auto layers = shaped_layers(sizes);
  for (auto& l : layers) {
    for (double& w : l.weights) w = r.get<double>();
    for (double& b : l.bias) b = r.get<double>();
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  try {
    return Mlp(std::move(layers), static_cast<Head>(head_byte), dropout);
  } catch (const InputError& e) {
    throw FormatError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& m) {
  const auto bytes = to_checkpoint_bytes(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_checkpoint_bytes(bytes);
}

}  // namespace sk
