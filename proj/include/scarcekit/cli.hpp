#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scarcekit/dataset.hpp"

namespace sk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `scarcekit` executable. Results go to `out`, logs and
/// errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One prediction row per sample: `id,class,output_0[,output_1,output_2]`.
struct PredictionRow {
  std::int64_t id = 0;
  int label = 0;
  std::vector<double> output;
};
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

}  // namespace sk::cli
