#include "scarcekit/cli.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "scarcekit/config.hpp"
#include "scarcekit/io.hpp"
#include "scarcekit/pipeline.hpp"
#include "scarcekit/rpl.hpp"
#include "scarcekit/synth.hpp"

namespace sk::cli {

namespace fs = std::filesystem;

void write_predictions(const fs::path& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::size_t width = rows.empty() ? 1 : rows.front().output.size();
  out << "id,class";
  for (std::size_t k = 0; k < width; ++k) out << ",output_" << k;
  out << '\n';
  for (const auto& r : rows) {
    if (r.output.size() != width) throw InputError("prediction rows have different output sizes");
    out << r.id << ',' << r.label;
    for (double v : r.output) out << ',' << io::format_double(v);
    out << '\n';
  }
}

std::vector<PredictionRow> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,class,output_0", 0) != 0)
    throw FormatError(path.string() + ": expected header id,class,output_0,...");
  const auto width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
  std::vector<PredictionRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != width + 2)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
    PredictionRow r;
    try {
      r.id = std::stoll(cells[0]);
      r.label = OrdinalLabel(std::stoi(cells[1])).value();
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed id or class");
    }
    for (std::size_t k = 0; k < width; ++k) r.output.push_back(io::parse_double(cells[k + 2]));
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::string task;
  std::optional<std::size_t> n;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
    if (!o.task.empty() && parse_task(o.task) != cfg.task)
      throw ConfigError("--task " + o.task + " contradicts run.task in " + o.config);
  } else {
    cfg = default_config(o.task.empty() ? Task::kGrading : parse_task(o.task));
  }
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

std::uint64_t single_seed(const Options& o, const RunConfig& cfg) {
  if (o.seed) return *o.seed;
  if (!cfg.seeds.empty()) return cfg.seeds.front();
  throw ConfigError("a seed is required (--seed N or run.seeds in the config)");
}

std::vector<std::uint64_t> seed_list(const Options& o, const RunConfig& cfg) {
  if (!o.seeds.empty()) return parse_seed_list(o.seeds);
  if (o.seed) return {*o.seed};
  if (!cfg.seeds.empty()) return cfg.seeds;
  throw ConfigError("a seed list is required (--seeds a,b,c or run.seeds in the config)");
}

const fs::path& require(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string(key) + " is required for this command");
  if (!fs::exists(p)) throw InputError(std::string(key) + " does not exist: " + p.string());
  return p;
}

std::string counts_line(const TabularDataset& d) {
  const auto c = d.label_counts();
  return "counts " + std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]);
}

std::string seg_summary(const SegDataset& d) {
  std::size_t lesion = 0;
  std::array<std::size_t, kNumLesions> px{};
  for (const auto& s : d.samples) {
    if (!s.masks) continue;
    bool any = false;
    for (int c = 0; c < kNumLesions; ++c) {
      px[c] += s.masks->positives(c);
      any = any || s.masks->positives(c) > 0;
    }
    lesion += any;
  }
  return "images " + std::to_string(d.size()) + ", with lesions " + std::to_string(lesion) + ", lesion pixels irma " +
         std::to_string(px[0]) + " np " + std::to_string(px[1]) + " nv " + std::to_string(px[2]);
}

void cmd_synth(const RunConfig& cfg, std::uint64_t seed, std::optional<std::size_t> n, std::ostream& out) {
  fs::create_directories(cfg.out_dir);
  if (cfg.task == Task::kSegmentation) {
    if (n) {
      SegSpec spec;
      spec.n = *n;
      spec.size = cfg.synth.image_size;
      spec.seed = seed;
      spec.artifact_fraction = cfg.synth.artifact_fraction;
      const auto d = gen_seg_dataset(spec);
      io::write_seg_dataset(cfg.out_dir / "data", d);
      out << "data: " << seg_summary(d) << '\n';
      return;
    }
    const auto pools = make_seg_pools(cfg, seed);
    io::write_seg_dataset(cfg.out_dir / "train", pools.train);
    io::write_seg_dataset(cfg.out_dir / "dev", pools.dev);
    out << "train: " << seg_summary(pools.train) << '\n' << "dev: " << seg_summary(pools.dev) << '\n';
    return;
  }
  if (n) {
    OrdinalSpec spec;
    spec.n = *n;
    spec.proportions = task_proportions(cfg.task);
    spec.noise = cfg.synth.noise;
    spec.dim = cfg.synth.dim;
    spec.separation = cfg.synth.separation;
    spec.seed = seed;
    spec.task = cfg.task;
    const auto d = gen_ordinal_dataset(spec);
    io::write_tabular(cfg.out_dir / "data.csv", d);
    out << "data.csv: " << d.size() << " samples, " << counts_line(d) << '\n';
    return;
  }
  const auto pools = make_tabular_pools(cfg, seed);
  io::write_tabular(cfg.out_dir / "train.csv", pools.labeled);
  io::write_tabular(cfg.out_dir / "unlabeled.csv", pools.unlabeled);
  io::write_tabular(cfg.out_dir / "dev.csv", pools.dev);
  out << "train.csv: " << pools.labeled.size() << " samples, " << counts_line(pools.labeled) << '\n'
      << "unlabeled.csv: " << pools.unlabeled.size() << " samples\n"
      << "dev.csv: " << pools.dev.size() << " samples, " << counts_line(pools.dev) << '\n';
}

void cmd_train(const RunConfig& cfg, std::uint64_t seed, std::ostream& out, std::ostream& log) {
  fs::create_directories(cfg.out_dir);
  const auto& train_path = require(cfg.data.train, "data.train");
  if (cfg.task == Task::kSegmentation) {
    const auto data = io::read_seg_dataset(train_path);
    const auto pipeline = aug::build_pipeline(Task::kSegmentation);
    log << "training small-lesion model and NP ensemble of " << cfg.members << '\n';
    const auto sys = train_seg_system(data, seg_system_config(cfg.train_config(seed), cfg.members), seed,
                                      cfg.augment ? &pipeline : nullptr);
    save_seg_system(cfg.out_dir, sys);
    out << "model: " << (cfg.out_dir / "seg_small.json").string() << ", " << (cfg.out_dir / "seg_np.json").string()
        << '\n';
    return;
  }
  const auto data = io::read_tabular(train_path, cfg.task);
  log << "training " << cfg.members << " member(s) on " << data.size() << " samples\n";
  const auto e = train_deep_ensemble(data, cfg.train_config(seed), cfg.head, cfg.shape, cfg.members, seed);
  save_ensemble(cfg.out_dir, e, "model");
  out << "model: " << (cfg.out_dir / "model.json").string() << '\n';
}

void cmd_rpl(const RunConfig& cfg, std::uint64_t seed, bool naive, std::ostream& out, std::ostream& log) {
  if (cfg.task == Task::kSegmentation) throw ConfigError("pseudo labeling applies to grading and quality tasks");
  fs::create_directories(cfg.out_dir);
  const auto labeled = io::read_tabular(require(cfg.data.train, "data.train"), cfg.task);
  const auto unlabeled = io::read_tabular(require(cfg.data.unlabeled, "data.unlabeled"), cfg.task).unlabeled();
  log << (naive ? "naive pseudo labeling" : "reliable pseudo labeling, T=" + std::to_string(cfg.rounds)) << '\n';
  const auto r = naive ? naive_pl_train(labeled, unlabeled, cfg.rpl_config(seed))
                       : rpl_train(labeled, unlabeled, cfg.rpl_config(seed));
  save_ensemble(cfg.out_dir, r.model, "model");
  write_audit_csv(cfg.out_dir / "rpl_audit.csv", r.audit);
  out << "model: " << (cfg.out_dir / "model.json").string() << '\n'
      << "audit: " << (cfg.out_dir / "rpl_audit.csv").string() << " (" << r.audit.size() / kNumGrades
      << " rounds)\n";
}

Ensemble restrict_members(Ensemble e, std::size_t k) {
  if (k < e.size()) {
    e.members.resize(k);
    e.seeds.resize(k);
  }
  return e;
}

void cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  fs::create_directories(cfg.out_dir);
  const auto& model = require(cfg.data.model, "data.model");
  const auto& input = require(cfg.data.input, "data.input");
  if (cfg.task == Task::kSegmentation) {
    auto sys = load_seg_system(fs::is_directory(model) ? model : model.parent_path());
    sys.np = restrict_members(std::move(sys.np), cfg.members);
    const auto inf = seg_inference(cfg);
    log << "pipeline: " << describe(inf, sys.np.size()) << '\n';
    auto data = io::read_seg_dataset(input);
    for (auto& s : data.samples) s.masks = predict_seg_pipeline(sys, s.image.pixels(), inf).masks;
    io::write_seg_dataset(cfg.out_dir / "predictions", data);
    out << "predictions: " << (cfg.out_dir / "predictions").string() << " (" << data.size() << " images)\n";
    return;
  }
  const auto e = restrict_members(load_ensemble(model), cfg.members);
  const auto inf = tabular_inference(cfg);
  const bool postedit = inf.post && cfg.task == Task::kGrading && !cfg.data.masks.empty();
  log << "pipeline: " << describe(inf, e.size(), e.head()) << (postedit ? " -> grade post-edit from masks" : "")
      << '\n';
  const auto data = io::read_tabular(input, cfg.task);
  std::vector<PredictionRow> rows;
  for (const auto& s : data.samples) {
    auto p = predict_tabular_pipeline(e, s.features, inf);
    if (postedit) {
      const auto masks = io::read_mask(require(cfg.data.masks, "data.masks") / std::to_string(s.id));
      p.label = post::grade_postedit(OrdinalLabel(p.label), masks, cfg.post.edit_rule).value();
    }
    rows.push_back({s.id, p.label, std::move(p.output)});
  }
  write_predictions(cfg.out_dir / "predictions.csv", rows);
  out << "predictions: " << (cfg.out_dir / "predictions.csv").string() << " (" << rows.size() << " samples)\n";
}

void cmd_evaluate(const RunConfig& cfg, std::uint64_t seed, std::ostream& out) {
  fs::create_directories(cfg.out_dir);
  const auto& pred_path = require(cfg.data.predictions, "data.predictions");
  const auto& dev_path = require(cfg.data.dev, "data.dev");
  MetricsReport rep;
  if (cfg.task == Task::kSegmentation) {
    const auto pred = io::read_seg_dataset(pred_path);
    const auto truth = io::read_seg_dataset(dev_path);
    std::map<std::int64_t, const MaskSet*> by_id;
    for (const auto& s : pred.samples)
      if (s.masks) by_id[s.id] = &*s.masks;
    std::vector<MaskSet> p, t;
    for (const auto& s : truth.samples) {
      if (!s.masks) continue;
      const auto it = by_id.find(s.id);
      if (it == by_id.end()) throw InputError("no prediction for image " + std::to_string(s.id));
      p.push_back(*it->second);
      t.push_back(*s.masks);
    }
    rep = evaluate_seg(p, t);
  } else {
    const auto rows = read_predictions(pred_path);
    const auto truth = io::read_tabular(dev_path, cfg.task);
    std::map<std::int64_t, const PredictionRow*> by_id;
    for (const auto& r : rows) by_id[r.id] = &r;
    std::vector<int> t, p;
    std::vector<std::vector<double>> outputs;
    for (const auto& s : truth.samples) {
      if (!s.label) continue;
      const auto it = by_id.find(s.id);
      if (it == by_id.end()) throw InputError("no prediction for sample " + std::to_string(s.id));
      t.push_back(s.label->value());
      p.push_back(it->second->label);
      outputs.push_back(it->second->output);
    }
    rep = evaluate_tabular(t, p, outputs);
  }
  rep.task = cfg.task;
  rep.seed = seed;
  rep.config_digest = cfg.digest();
  rep.validate();
  rep.write(cfg.out_dir);
  out << rep.to_csv();
}

void cmd_ablate(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, std::ostream& out,
                std::ostream& log) {
  fs::create_directories(cfg.out_dir);
  const auto table = ablation_table(cfg, seeds, &log);
  const auto path = cfg.out_dir / "ablation.csv";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path.string());
  f << table;
  out << table;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"scarcekit: data-scarce training toolkit for retinal grading and lesion segmentation", "scarcekit"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--task", o.task, "grading, quality or segmentation (when no config sets it)");
  };
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  auto* train = app.add_subcommand("train", "train a supervised model or ensemble");
  auto* rpl = app.add_subcommand("rpl", "train with reliable pseudo labeling");
  auto* predict = app.add_subcommand("predict", "predict with ensemble, TTA and post-processing");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions and write a metrics report");
  auto* ablate = app.add_subcommand("ablate", "run the ablation grid over a seed list");
  bool naive = false;
  for (auto* sub : {synth, train, rpl, predict, evaluate, ablate}) {
    common(sub);
    sub->add_option("--seed", o.seed, "random seed");
  }
  synth->add_option("--n", o.n, "sample count (single data file instead of pools)");
  rpl->add_flag("--naive", naive, "keep every pseudo label in a single round");
  ablate->add_option("--seeds", o.seeds, "comma-separated seed list");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitConfig;
  }

  try {
    const RunConfig cfg = resolve_config(o);
    if (*synth) {
      cmd_synth(cfg, single_seed(o, cfg), o.n, out);
    } else if (*train) {
      cmd_train(cfg, single_seed(o, cfg), out, err);
    } else if (*rpl) {
      cmd_rpl(cfg, single_seed(o, cfg), naive, out, err);
    } else if (*predict) {
      single_seed(o, cfg);
      cmd_predict(cfg, out, err);
    } else if (*evaluate) {
      cmd_evaluate(cfg, single_seed(o, cfg), out);
    } else if (*ablate) {
      cmd_ablate(cfg, seed_list(o, cfg), out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace sk::cli
