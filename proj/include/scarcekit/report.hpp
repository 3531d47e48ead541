#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scarcekit/dataset.hpp"
#include "scarcekit/metrics.hpp"

namespace sk {

struct MetricRow {
  std::string metric;
  std::string label;  // "all", a grade index, or a lesion name
  double value = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct MetricsReport {
  Task task = Task::kGrading;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<MetricRow> rows;

  /// Throws NumericalError on non-finite values or values outside the
  /// metric's range.
  void validate() const;
  const MetricRow* find(std::string_view metric, std::string_view label = "all") const;

  /// `task,metric,class,value,seed,config_digest`
  std::string to_csv() const;
  /// {"task":..,"seed":..,"config_digest":..,"metrics":[{"metric","class","value"}]}
  std::string to_json() const;
  void write(const std::filesystem::path& dir, const std::string& stem = "report") const;
};

/// QWK, accuracy and macro/per-class one-vs-rest AUC. `outputs[i]` is the
/// model output for sample i: class probabilities or a 1-element scalar.
MetricsReport evaluate_tabular(std::span<const int> truth, std::span<const int> pred,
                               const std::vector<std::vector<double>>& outputs);

/// Image-averaged mean DSC/IoU and per-lesion DSC/IoU.
MetricsReport evaluate_seg(const std::vector<MaskSet>& pred, const std::vector<MaskSet>& truth);

std::string_view lesion_name(int channel);

}  // namespace sk
