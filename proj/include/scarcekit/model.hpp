#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scarcekit/random.hpp"

namespace sk {

/// Output head of an Mlp.
enum class Head : std::uint8_t {
  kSoftmax = 0,       // C-way probability vector
  kScalar = 1,        // one real output (ordinal regression)
  kPixelSigmoid = 2,  // independent sigmoid per lesion channel
};

std::string_view to_string(Head h);

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  bool operator==(const DenseLayer&) const = default;
};

/// Parameter-shaped gradient buffer.
using Gradients = std::vector<DenseLayer>;

/// Fully connected network: ReLU between layers, inverted dropout on hidden
/// activations during training only, head activation on the last layer.
class Mlp {
 public:
  /// Per-sample scratch for forward_train/backward. Reusable across calls.
  struct Cache {
    std::vector<std::vector<double>> activations;  // input, hidden..., logits
    std::vector<std::vector<double>> keep;         // dropout scale per hidden unit
    std::vector<double> delta, prev;               // backward scratch
  };

  Mlp() = default;
  /// He-normal weights for hidden layers, 1/fan_in variance for the output
  /// layer, zero biases.
  Mlp(std::vector<int> sizes, Head head, double dropout, Rng& rng);
  /// All parameters zero.
  static Mlp zeros(std::vector<int> sizes, Head head, double dropout);

  /// Inference output: probabilities, the scalar, or per-channel sigmoids.
  std::vector<double> forward(std::span<const double> x) const;
  /// Pre-activation outputs (no head activation, no dropout).
  std::vector<double> logits(std::span<const double> x) const;

  /// Training forward pass; dropout masks are sampled from `rng` when
  /// non-null. Returns the logits stored in cache.activations.back().
  std::span<const double> forward_train(std::span<const double> x, Rng* rng, Cache& cache) const;
  /// Accumulates d(loss)/d(params) for one sample into `grads`.
  void backward(Cache& cache, std::span<const double> grad_logits, Gradients& grads) const;

  Gradients zero_gradients() const;

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  Head head() const noexcept { return head_; }
  double dropout() const noexcept { return dropout_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  bool all_finite() const;

  bool operator==(const Mlp&) const = default;

 private:
  Mlp(std::vector<DenseLayer> layers, Head head, double dropout);
  void check_input(std::span<const double> x) const;

  std::vector<DenseLayer> layers_;
  Head head_ = Head::kScalar;
  double dropout_ = 0.0;

  friend Mlp from_checkpoint_bytes(std::span<const std::uint8_t> bytes);
};

/// Checkpoint bytes: "SKL1", u8 head, 3 reserved bytes, f64 dropout,
/// u32 layer-size count, u32 sizes..., then per layer the row-major weights
/// and biases. Every number little-endian; reals are IEEE-754 binary64.
std::vector<std::uint8_t> to_checkpoint_bytes(const Mlp& m);
Mlp from_checkpoint_bytes(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Mlp& m);
Mlp load_checkpoint(const std::filesystem::path& path);

double sigmoid(double z);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace sk
