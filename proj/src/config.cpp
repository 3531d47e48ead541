#include "scarcekit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "scarcekit/io.hpp"

namespace sk {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view v) {
  try {
    return io::parse_double(v);
  } catch (const Error&) {
    throw ConfigError("not a number: '" + std::string(v) + "'");
  }
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("not a non-negative integer: '" + std::string(v) + "'");
  return out;
}

int to_int(std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("not an integer: '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("not a boolean: '" + std::string(v) + "'");
}

Head to_head(std::string_view v) {
  if (v == "softmax" || v == "classifier") return Head::kSoftmax;
  if (v == "scalar" || v == "regressor") return Head::kScalar;
  throw ConfigError("unknown head '" + std::string(v) + "' (expected classifier or regressor)");
}

std::string show(double v) { return io::format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(int v) { return std::to_string(v); }

template <typename T>
std::string show_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += io::format_double(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
  bool semantic = true;
};

#define SK_FIELD(sec, name, member, parse)                                             \
  Field {                                                                              \
    sec, name, [](RunConfig& c, std::string_view v) { c.member = parse(v); },         \
        [](const RunConfig& c) { return show(c.member); }                             \
  }

std::size_t to_size(std::string_view v) { return static_cast<std::size_t>(to_u64(v)); }
std::string show_size(std::size_t v) { return std::to_string(v); }

#define SK_SIZE(sec, name, member)                                                      \
  Field {                                                                               \
    sec, name, [](RunConfig& c, std::string_view v) { c.member = to_size(v); },        \
        [](const RunConfig& c) { return show_size(c.member); }                         \
  }

#define SK_PATH(sec, name, member)                                                      \
  Field {                                                                               \
    sec, name, [](RunConfig& c, std::string_view v) { c.member = std::string(v); },    \
        [](const RunConfig& c) { return c.member.generic_string(); }                   \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"run", "task", [](RunConfig& c, std::string_view v) { c.task = parse_task(v); },
            [](const RunConfig& c) { return std::string(to_string(c.task)); }},
      Field{"run", "head", [](RunConfig& c, std::string_view v) { c.head = to_head(v); },
            [](const RunConfig& c) { switch (c.head) {
              case Head::kSoftmax: return std::string("classifier");
              case Head::kScalar: return std::string("regressor");
              default: return std::string("segmenter");
            }
          }},
      Field{"run", "seeds", [](RunConfig& c, std::string_view v) { c.seeds = parse_seed_list(v); },
            [](const RunConfig& c) { return show_list(c.seeds); }, false},
      Field{"run", "out", [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); },
            [](const RunConfig& c) { return c.out_dir.generic_string(); }, false},

      SK_FIELD("data", "split_ratio", split_ratio, to_double),
      SK_PATH("data", "train", data.train),
      SK_PATH("data", "dev", data.dev),
      SK_PATH("data", "unlabeled", data.unlabeled),
      SK_PATH("data", "input", data.input),
      SK_PATH("data", "model", data.model),
      SK_PATH("data", "predictions", data.predictions),
      SK_PATH("data", "masks", data.masks),

      SK_FIELD("train", "learning_rate", train.learning_rate, to_double),
      SK_FIELD("train", "weight_decay", train.weight_decay, to_double),
      SK_SIZE("train", "batch_size", train.batch_size),
      SK_SIZE("train", "epochs", train.epochs),
      Field{"train", "aux_loss", [](RunConfig& c, std::string_view v) { c.train.aux = parse_aux_loss(v); },
            [](const RunConfig& c) { return std::string(to_string(c.train.aux)); }},
      SK_FIELD("train", "alpha", train.alpha, to_double),
      SK_FIELD("train", "hidden", shape.hidden, to_int),
      SK_FIELD("train", "dropout", shape.dropout, to_double),

      SK_SIZE("rpl", "rounds", rounds),
      SK_SIZE("ensemble", "members", members),

      SK_FIELD("tta", "flip", tta.flip, to_bool),
      SK_FIELD("tta", "rotate", tta.rotate, to_bool),
      Field{"tta", "rotations",
            [](RunConfig& c, std::string_view v) {
              c.tta.rotations.clear();
              for (auto item : split_list(v)) c.tta.rotations.push_back(to_int(item));
            },
            [](const RunConfig& c) { return show_list(c.tta.rotations); }},
      SK_FIELD("tta", "mpa", tta.mpa, to_bool),
      Field{"tta", "mpa_scales",
            [](RunConfig& c, std::string_view v) {
              c.tta.mpa_scales.clear();
              for (auto item : split_list(v)) c.tta.mpa_scales.push_back(to_double(item));
            },
            [](const RunConfig& c) { return show_list(c.tta.mpa_scales); }},

      SK_FIELD("post", "enabled", post.enabled, to_bool),
      SK_FIELD("post", "quality_low", post.grade_rule.low, to_double),
      SK_FIELD("post", "quality_high", post.grade_rule.high, to_double),
      SK_SIZE("post", "nv_min_pixels", post.edit_rule.nv_min_pixels),
      SK_FIELD("post", "reconcile", post.seg.reconcile, to_bool),
      SK_FIELD("post", "np_dilation", post.seg.np_dilation, to_int),
      SK_FIELD("post", "np_reference_side", post.seg.reference_side, to_int),

      SK_FIELD("augment", "enabled", augment, to_bool),

      SK_SIZE("synth", "labeled", synth.labeled),
      SK_SIZE("synth", "unlabeled", synth.unlabeled),
      SK_SIZE("synth", "dev", synth.dev),
      SK_FIELD("synth", "noise", synth.noise, to_double),
      SK_SIZE("synth", "dim", synth.dim),
      SK_FIELD("synth", "separation", synth.separation, to_double),
      SK_FIELD("synth", "image_size", synth.image_size, to_int),
      SK_SIZE("synth", "seg_train", synth.seg_train),
      SK_SIZE("synth", "seg_dev", synth.seg_dev),
      SK_FIELD("synth", "artifact_fraction", synth.artifact_fraction, to_double),
  };
  return table;
}

#undef SK_FIELD
#undef SK_SIZE
#undef SK_PATH

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (auto item : split_list(text)) out.push_back(to_u64(item));
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

RunConfig default_config(Task task) {
  RunConfig c;
  c.task = task;
  if (task == Task::kSegmentation) {
    c.train.learning_rate = 1e-4;
    c.train.batch_size = 2;
    c.train.epochs = 400;
    c.shape.dropout = 0.0;
    c.head = Head::kPixelSigmoid;
  }
  return c;
}

void RunConfig::validate() const {
  try {
    train.validate();
    post.grade_rule.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("data.split_ratio must lie in (0, 1)");
  if (train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (shape.hidden < 1) throw ConfigError("train.hidden must be >= 1");
  if (!(shape.dropout >= 0.0 && shape.dropout < 1.0)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (rounds < 1) throw ConfigError("rpl.rounds must be >= 1");
  if (members < 1) throw ConfigError("ensemble.members must be >= 1");
  for (int a : tta.rotations)
    if (a % 90 != 0) throw ConfigError("tta.rotations must be multiples of 90");
  if (tta.rotate && tta.rotations.empty()) throw ConfigError("tta.rotations is empty");
  for (double s : tta.mpa_scales)
    if (!(s >= 1.0)) throw ConfigError("tta.mpa_scales must be >= 1");
  if (tta.mpa && tta.mpa_scales.empty()) throw ConfigError("tta.mpa_scales is empty");
  if (post.seg.np_dilation < 1 || post.seg.np_dilation % 2 == 0)
    throw ConfigError("post.np_dilation must be odd and >= 1");
  if (task == Task::kSegmentation && head != Head::kPixelSigmoid)
    throw ConfigError("segmentation uses the per-pixel segmenter; remove run.head");
  if (task != Task::kSegmentation && head == Head::kPixelSigmoid)
    throw ConfigError("run.head must be classifier or regressor");
  if (synth.noise < 0.0) throw ConfigError("synth.noise must be >= 0");
  if (synth.dim < 1) throw ConfigError("synth.dim must be >= 1");
  if (synth.image_size < 32) throw ConfigError("synth.image_size must be >= 32");
  if (!(synth.artifact_fraction >= 0.0 && synth.artifact_fraction <= 1.0))
    throw ConfigError("synth.artifact_fraction must lie in [0, 1]");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& f : fields()) {
    if (!f.semantic) continue;
    out += f.section;
    out += '.';
    out += f.key;
    out += '=';
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

RplConfig RunConfig::rpl_config(std::uint64_t seed) const {
  RplConfig r;
  r.rounds = rounds;
  r.members = members;
  r.train = train_config(seed);
  r.shape = shape;
  r.head = head;
  return r;
}

RunConfig parse_config(std::string_view text) {
  struct Entry {
    std::string section, key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::set<std::string> seen;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return section == f.section; });
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    Entry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), lineno};
    if (!seen.insert(e.section + "." + e.key).second)
      throw ConfigError(where + "duplicate key " + e.section + "." + e.key);
    entries.push_back(std::move(e));
  }

  RunConfig cfg;
  const auto task_it = std::find_if(entries.begin(), entries.end(),
                                    [](const Entry& e) { return e.section == "run" && e.key == "task"; });
  try {
    cfg = default_config(task_it == entries.end() ? Task::kGrading : parse_task(task_it->value));
  } catch (const InputError& err) {
    throw ConfigError("line " + std::to_string(task_it->line) + ": " + err.what());
  }
  for (const auto& e : entries) {
    const auto f = std::find_if(fields().begin(), fields().end(), [&](const Field& fd) {
      return e.section == fd.section && e.key == fd.key;
    });
    const auto where = "line " + std::to_string(e.line) + ": ";
    if (f == fields().end()) throw ConfigError(where + "unknown key " + e.section + "." + e.key);
    try {
      f->set(cfg, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(where + e.section + "." + e.key + ": " + err.what());
    } catch (const InputError& err) {
      throw ConfigError(where + e.section + "." + e.key + ": " + err.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace sk
