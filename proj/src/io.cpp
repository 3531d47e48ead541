#include "scarcekit/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace sk::io {

namespace {

constexpr std::array<const char*, kNumLesions> kMaskSuffix{"_irma.pgm", "_np.pgm", "_nv.pgm"};

std::string read_token(std::istream& in) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int parse_header_int(const std::string& tok, const fs::path& path, const char* what) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || v <= 0)
    throw FormatError(path.string() + ": malformed PGM " + what);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cols;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cols.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cols.push_back(cur);
  return cols;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw FormatError("malformed number '" + std::string(s) + "'");
  return v;
}

Raster<int> read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (read_token(in) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  const int width = parse_header_int(read_token(in), path, "width");
  const int height = parse_header_int(read_token(in), path, "height");
  const int maxval = parse_header_int(read_token(in), path, "maxval");
  if (maxval > 255) throw FormatError(path.string() + ": 16-bit PGM is not supported");
  std::vector<char> bytes(static_cast<std::size_t>(width) * height);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw FormatError(path.string() + ": pixel data shorter than header dimensions");
  Raster<int> out(width, height);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int v = static_cast<unsigned char>(bytes[i]);
    if (v > maxval) throw FormatError(path.string() + ": pixel exceeds maxval");
    // Rescale to 0..255 so the rest of the code sees one range.
    out.values()[i] = maxval == 255 ? v : static_cast<int>(std::lround(v * 255.0 / maxval));
  }
  return out;
}

void write_pgm(const fs::path& path, const Raster<int>& raw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << raw.width() << ' ' << raw.height() << "\n255\n";
  std::vector<char> bytes(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int v = raw.values()[i];
    if (v < 0 || v > 255) throw InputError("PGM pixel outside [0,255]");
    bytes[i] = static_cast<char>(v);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Image read_image(const fs::path& path) { return normalize_image(read_pgm(path)); }

void write_image(const fs::path& path, const Image& image) {
  Raster<int> raw(image.width(), image.height());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw.values()[i] = static_cast<int>(std::lround(image.pixels().values()[i] * 255.0));
  write_pgm(path, raw);
}

fs::path mask_channel_path(const fs::path& prefix, int channel) {
  return fs::path(prefix.string() + kMaskSuffix.at(channel));
}

MaskSet read_mask(const fs::path& prefix) {
  std::array<BinaryPlane, kNumLesions> channels;
  for (int c = 0; c < kNumLesions; ++c) {
    const auto path = mask_channel_path(prefix, c);
    const auto raw = read_pgm(path);
    channels[c] = BinaryPlane(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i)
      channels[c].values()[i] = raw.values()[i] >= 128 ? 1 : 0;
    if (!channels[c].same_shape(channels[0]))
      throw FormatError(path.string() + ": channel dimensions differ");
  }
  return MaskSet(std::move(channels));
}

void write_mask(const fs::path& prefix, const MaskSet& mask) {
  for (int c = 0; c < kNumLesions; ++c) {
    const auto& ch = mask.channel(c);
    Raster<int> raw(ch.width(), ch.height());
    for (std::size_t i = 0; i < raw.size(); ++i) raw.values()[i] = ch.values()[i] ? 255 : 0;
    write_pgm(mask_channel_path(prefix, c), raw);
  }
}

TabularDataset read_tabular(const fs::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header.front() != "id" || header.back() != "label")
    throw FormatError(path.string() + ": header must be id,feat_0..,label");
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j)
    if (header[j + 1] != "feat_" + std::to_string(j))
      throw FormatError(path.string() + ": unexpected column '" + header[j + 1] + "'");

  TabularDataset d{task, dim, {}};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": column count mismatch");
    TabularSample s;
    std::int64_t id = 0;
    auto [p, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), id);
    if (ec != std::errc{} || p != cols[0].data() + cols[0].size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad id");
    s.id = id;
    s.features.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) s.features.push_back(parse_double(cols[j + 1]));
    if (!cols.back().empty()) {
      int label = 0;
      const auto& lc = cols.back();
      auto [lp, lec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
      if (lec != std::errc{} || lp != lc.data() + lc.size())
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad label");
      s.label = OrdinalLabel(label);
    }
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

void write_tabular(const fs::path& path, const TabularDataset& d) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "id";
  for (std::size_t j = 0; j < d.dim; ++j) out << ",feat_" << j;
  out << ",label\n";
  for (const auto& s : d.samples) {
    out << s.id;
    for (double v : s.features) out << ',' << format_double(v);
    out << ',';
    if (s.label) out << s.label->value();
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

SegDataset read_seg_dataset(const fs::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw FormatError("cannot open " + (dir / "index.csv").string());
  std::string line;
  std::getline(in, line);
  if (split_csv_line(line) != std::vector<std::string>{"id", "labeled"})
    throw FormatError((dir / "index.csv").string() + ": header must be id,labeled");
  SegDataset d;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 2 || (cols[1] != "0" && cols[1] != "1"))
      throw FormatError((dir / "index.csv").string() + ": malformed row '" + line + "'");
    SegSample s;
    s.id = static_cast<std::int64_t>(parse_double(cols[0]));
    s.image = read_image(dir / (cols[0] + ".pgm"));
    if (cols[1] == "1") {
      s.masks = read_mask(dir / cols[0]);
      if (s.masks->width() != s.image.width() || s.masks->height() != s.image.height())
        throw FormatError("mask dimensions do not match image " + cols[0]);
    }
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

void write_seg_dataset(const fs::path& dir, const SegDataset& d) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.csv");
  if (!index) throw FormatError("cannot write " + (dir / "index.csv").string());
  index << "id,labeled\n";
  for (const auto& s : d.samples) {
    const std::string stem = std::to_string(s.id);
    index << stem << ',' << (s.masks ? 1 : 0) << '\n';
    write_image(dir / (stem + ".pgm"), s.image);
    if (s.masks) write_mask(dir / stem, *s.masks);
  }
}

}  // namespace sk::io
