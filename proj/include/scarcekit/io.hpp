#pragma once

#include <filesystem>
#include <string>

#include "scarcekit/dataset.hpp"

namespace sk::io {

namespace fs = std::filesystem;

/// Binary PGM (P5). Reading accepts maxval 1..255 and '#' comments and
/// rescales values to the 0..255 range.
Raster<int> read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const Raster<int>& raw);

Image read_image(const fs::path& path);
/// Stores round(v * 255).
void write_image(const fs::path& path, const Image& image);

/// Channel files are `<prefix>_irma.pgm`, `<prefix>_np.pgm`, `<prefix>_nv.pgm`.
fs::path mask_channel_path(const fs::path& prefix, int channel);
/// Pixels >= 128 (on a 255 scale) become 1.
MaskSet read_mask(const fs::path& prefix);
/// Positive pixels are written as 255.
void write_mask(const fs::path& prefix, const MaskSet& mask);

/// CSV with header `id,feat_0..feat_{D-1},label`; empty label for unlabeled
/// rows. Doubles use the shortest round-trip representation.
TabularDataset read_tabular(const fs::path& path, Task task = Task::kGrading);
void write_tabular(const fs::path& path, const TabularDataset& d);

/// Directory layout: `index.csv` (`id,labeled`), `<id>.pgm` and, for
/// labeled samples, the three mask channel files with prefix `<id>`.
SegDataset read_seg_dataset(const fs::path& dir);
void write_seg_dataset(const fs::path& dir, const SegDataset& d);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace sk::io
