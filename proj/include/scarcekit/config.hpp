#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scarcekit/augment.hpp"
#include "scarcekit/dataset.hpp"
#include "scarcekit/postprocess.hpp"
#include "scarcekit/rpl.hpp"
#include "scarcekit/synth.hpp"
#include "scarcekit/train.hpp"

namespace sk {

struct DataPaths {
  std::filesystem::path train;      // labeled training set
  std::filesystem::path dev;        // held-out evaluation set
  std::filesystem::path unlabeled;  // pool for pseudo labeling
  std::filesystem::path input;      // prediction input
  std::filesystem::path model;      // ensemble manifest
  std::filesystem::path predictions;
  std::filesystem::path masks;  // per-sample lesion masks for grade post-editing
};

struct TtaOptions {
  bool flip = true;
  bool rotate = true;
  std::vector<int> rotations{kDefaultRotations.begin(), kDefaultRotations.end()};
  bool mpa = false;
  std::vector<double> mpa_scales{kDefaultMpaScales.begin(), kDefaultMpaScales.end()};
};

struct PostOptions {
  bool enabled = true;
  post::GradeDecisionRule grade_rule;
  post::PostEditRule edit_rule;
  post::SegPostConfig seg;
};

/// Sizes of the synthetic pools built for one seed.
struct SynthOptions {
  std::size_t labeled = 60;
  std::size_t unlabeled = 600;
  std::size_t dev = 300;
  double noise = 1.0;
  std::size_t dim = 8;
  double separation = 2.0;
  int image_size = 64;
  std::size_t seg_train = 40;
  std::size_t seg_dev = 10;
  double artifact_fraction = 0.2;
};

struct RunConfig {
  Task task = Task::kGrading;
  Head head = Head::kScalar;
  double split_ratio = 0.8;
  DataPaths data;
  TrainConfig train;
  ModelShape shape;
  std::size_t rounds = 5;
  std::size_t members = 5;
  TtaOptions tta;
  PostOptions post;
  bool augment = true;
  SynthOptions synth;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir = "out";

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  /// FNV-1a 64 over the canonical text of every semantic field (seeds and
  /// output directory excluded), as 16 hex digits.
  std::string digest() const;
  /// Canonical `section.key=value` lines in fixed order.
  std::string canonical() const;

  RplConfig rpl_config(std::uint64_t seed) const;
  TrainConfig train_config(std::uint64_t seed) const;
};

/// Default configuration for a task (segmentation switches the learning
/// rate, batch size, epochs and loss to their segmentation values).
RunConfig default_config(Task task);

/// Strict parser: `[section]` headers, `key = value` lines, `#` comments.
/// Unknown sections or keys, duplicates and malformed values throw
/// ConfigError. `[run] task` is applied first so later keys override the
/// task defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace sk
