#include "scarcekit/report.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "scarcekit/io.hpp"

namespace sk {

std::string_view lesion_name(int channel) {
  switch (channel) {
    case 0: return "irma";
    case 1: return "np";
    case 2: return "nv";
  }
  throw InputError("lesion channel out of range");
}

void MetricsReport::validate() const {
  for (const auto& r : rows) {
    if (!std::isfinite(r.value)) throw NumericalError("metric " + r.metric + " is not finite");
    const bool kappa = r.metric == "qwk";
    const double lo = kappa ? -1.0 : 0.0;
    if (r.value < lo || r.value > 1.0)
      throw NumericalError("metric " + r.metric + " out of range: " + io::format_double(r.value));
  }
}

const MetricRow* MetricsReport::find(std::string_view metric, std::string_view label) const {
  for (const auto& r : rows)
    if (r.metric == metric && r.label == label) return &r;
  return nullptr;
}

std::string MetricsReport::to_csv() const {
  std::string out = "task,metric,class,value,seed,config_digest\n";
  for (const auto& r : rows) {
    out += to_string(task);
    out += ',' + r.metric + ',' + r.label + ',' + io::format_double(r.value) + ',' + std::to_string(seed) + ',' +
           config_digest + '\n';
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = to_string(task);
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) j["metrics"].push_back({{"metric", r.metric}, {"class", r.label}, {"value", r.value}});
  return j.dump(2) + "\n";
}

void MetricsReport::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::filesystem::create_directories(dir);
  for (const auto& [ext, text] : {std::pair{".csv", to_csv()}, std::pair{".json", to_json()}}) {
    const auto path = dir / (stem + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
  }
}

MetricsReport evaluate_tabular(std::span<const int> truth, std::span<const int> pred,
                               const std::vector<std::vector<double>>& outputs) {
  if (outputs.size() != truth.size()) throw InputError("output and truth lengths differ");
  MetricsReport rep;
  rep.rows.push_back({"qwk", "all", qwk(ConfusionMatrix::from(truth, pred))});
  rep.rows.push_back({"accuracy", "all", accuracy(pred, truth)});
  std::vector<std::vector<double>> scores;
  scores.reserve(outputs.size());
  for (const auto& o : outputs) scores.push_back(o.size() == 1 ? regression_class_scores(o[0]) : o);
  const auto auc = auc_macro_ovr(scores, truth);
  rep.rows.push_back({"auc", "all", auc.macro});
  for (std::size_t c = 0; c < auc.per_class.size(); ++c)
    if (!std::isnan(auc.per_class[c])) rep.rows.push_back({"auc", std::to_string(c), auc.per_class[c]});
  return rep;
}

MetricsReport evaluate_seg(const std::vector<MaskSet>& pred, const std::vector<MaskSet>& truth) {
  if (pred.size() != truth.size()) throw InputError("prediction and truth counts differ");
  if (pred.empty()) throw InputError("no masks to evaluate");
  double mdsc = 0.0, miou = 0.0;
  std::array<double, kNumLesions> d{}, u{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mdsc += mean_dsc(pred[i], truth[i]);
    miou += mean_iou(pred[i], truth[i]);
    for (int c = 0; c < kNumLesions; ++c) {
      d[c] += dsc(pred[i].channel(c), truth[i].channel(c));
      u[c] += iou(pred[i].channel(c), truth[i].channel(c));
    }
  }
  const double n = static_cast<double>(pred.size());
  MetricsReport rep;
  rep.task = Task::kSegmentation;
  rep.rows.push_back({"mean_dsc", "all", mdsc / n});
  rep.rows.push_back({"mean_iou", "all", miou / n});
  for (int c = 0; c < kNumLesions; ++c) rep.rows.push_back({"dsc", std::string(lesion_name(c)), d[c] / n});
  for (int c = 0; c < kNumLesions; ++c) rep.rows.push_back({"iou", std::string(lesion_name(c)), u[c] / n});
  return rep;
}

}  // namespace sk
