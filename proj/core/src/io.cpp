#include "afrg/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>

#include "afrg/error.hpp"
#include "afrg/rng.hpp"

namespace afrg {

namespace {

constexpr std::uint16_t kModelVersion = 1;
constexpr std::uint16_t kDecoderVersion = 1;
constexpr char kModelMagic[4] = {'A', 'F', 'R', 'G'};
constexpr char kDecoderMagic[4] = {'A', 'F', 'R', 'D'};
constexpr std::size_t kMaxDim = 1u << 24;  // refuse absurd headers before allocating

// little-endian encoders, independent of host byte order
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint16_t u16() {
    const char* p = take(2);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(p[0]) |
                                      (static_cast<std::uint8_t>(p[1]) << 8));
  }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic(const char magic[4]) {
    const char* p = take(4);
    if (std::memcmp(p, magic, 4) != 0) throw BadMagicError(name_ + ": bad magic");
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw TruncatedFileError(name_ + ": truncated file");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const Model& m, const std::filesystem::path& path) {
  std::string out;
  out.append(kModelMagic, 4);
  put_u16(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(m.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(m.num_classes()));
  put_u32(out, static_cast<std::uint32_t>(m.layers().size()));
  for (const Layer& l : m.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.weights.rows()));
    put_u32(out, static_cast<std::uint32_t>(l.weights.cols()));
    out.push_back(static_cast<char>(l.activation));
    for (double v : l.weights.values()) put_f64(out, v);
    for (double v : l.bias.values()) put_f64(out, v);
  }
  atomic_write_file(path, out);
}

Model load_model(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  r.expect_magic(kModelMagic);
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw VersionMismatchError(path.string() + ": unsupported model version " +
                               std::to_string(version));
  }
  const std::uint32_t input_dim = r.u32();
  const std::uint32_t num_classes = r.u32();
  const std::uint32_t n_layers = r.u32();
  if (input_dim == 0 || num_classes == 0 || n_layers == 0 || n_layers > 1024) {
    throw ParseError(path.string() + ": implausible model header");
  }
  std::vector<Layer> layers;
  layers.reserve(n_layers);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) {
      throw ParseError(path.string() + ": implausible layer dims");
    }
    const std::uint8_t act = r.u8();
    if (act > 1) throw ParseError(path.string() + ": unknown activation code");
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    for (double& v : w) v = r.f64();
    std::vector<double> b(rows);
    for (double& v : b) v = r.f64();
    layers.push_back({Matrix(rows, cols, std::move(w)), Vector(std::move(b)),
                      static_cast<Activation>(act)});
  }
  Model m(std::move(layers));
  if (m.input_dim() != input_dim || m.num_classes() != num_classes) {
    throw ParseError(path.string() + ": header dims disagree with layers");
  }
  return m;
}

AttractorDecoder realize_decoder(const DecoderSpec& spec) {
  if (spec.kind == DecoderSpec::Kind::spread_spectrum) {
    return gen_spread_spectrum(DecoderSeed{spec.seed}, spec.num_classes, spec.input_dim,
                               spec.gain);
  }
  return gen_qim(DecoderSeed{spec.seed}, spec.num_classes, spec.input_dim, spec.projections,
                 spec.step, spec.weights);
}

void save_decoder_spec(const DecoderSpec& spec, const std::filesystem::path& path) {
  std::string out;
  out.append(kDecoderMagic, 4);
  put_u16(out, kDecoderVersion);
  out.push_back(static_cast<char>(spec.kind));
  put_u64(out, spec.seed);
  put_u32(out, static_cast<std::uint32_t>(spec.num_classes));
  put_u32(out, static_cast<std::uint32_t>(spec.input_dim));
  if (spec.kind == DecoderSpec::Kind::spread_spectrum) {
    put_f64(out, spec.gain);
  } else {
    put_u32(out, static_cast<std::uint32_t>(spec.projections));
    put_f64(out, spec.step);
    std::vector<double> weights = spec.weights;
    if (weights.empty()) {
      weights.assign(spec.projections, 1.0 / static_cast<double>(spec.projections));
    }
    put_u32(out, static_cast<std::uint32_t>(weights.size()));
    for (double w : weights) put_f64(out, w);
  }
  atomic_write_file(path, out);
}

DecoderSpec load_decoder_spec(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  r.expect_magic(kDecoderMagic);
  const std::uint16_t version = r.u16();
  if (version != kDecoderVersion) {
    throw VersionMismatchError(path.string() + ": unsupported decoder version " +
                               std::to_string(version));
  }
  DecoderSpec spec;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw ParseError(path.string() + ": unknown decoder kind");
  spec.kind = static_cast<DecoderSpec::Kind>(kind);
  spec.seed = r.u64();
  spec.num_classes = r.u32();
  spec.input_dim = r.u32();
  if (spec.num_classes == 0 || spec.input_dim == 0 || spec.num_classes > kMaxDim ||
      spec.input_dim > kMaxDim) {
    throw ParseError(path.string() + ": implausible decoder dims");
  }
  if (spec.kind == DecoderSpec::Kind::spread_spectrum) {
    spec.gain = r.f64();
  } else {
    spec.projections = r.u32();
    spec.step = r.f64();
    const std::uint32_t n_weights = r.u32();
    if (spec.projections == 0 || n_weights != spec.projections || n_weights > kMaxDim) {
      throw ParseError(path.string() + ": implausible projection count");
    }
    spec.weights.resize(n_weights);
    for (double& w : spec.weights) w = r.f64();
  }
  return spec;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_csv_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < data.input_dim(); ++i) {
    out += "x" + std::to_string(i) + ",";
  }
  out += "label\n";
  for (const LabeledSample& s : data.samples()) {
    for (double v : s.x) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(s.label);
    out += '\n';
  }
  atomic_write_file(path, out);
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trimmed(cell);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

}  // namespace

CsvLoadResult load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes,
                               SplitTag tag) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<LabeledSample> samples;
  std::size_t clipped = 0;
  std::size_t expected_cols = 0;
  std::size_t row = 0;
  std::size_t max_label = 0;
  std::string line;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++row;
    const std::string content = trimmed(line);
    if (content.empty()) continue;
    std::vector<std::string> cells = split_row(content);
    if (first_content_line) {
      double probe;
      if (!parse_double(cells[0], probe)) {
        first_content_line = false;  // header row
        continue;
      }
    }
    first_content_line = false;
    if (cells.size() < 2) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has too few columns");
    }
    if (expected_cols == 0) {
      expected_cols = cells.size();
    } else if (cells.size() != expected_cols) {
      throw ParseError(path.string() + ": row " + std::to_string(row) +
                       " has inconsistent column count");
    }
    std::vector<double> features(cells.size() - 1);
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
      double v;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw ParseError(path.string() + ": row " + std::to_string(row) + ", column " +
                         std::to_string(c + 1) + " is not a finite number");
      }
      if (v < 0.0) {
        v = 0.0;
        ++clipped;
      } else if (v > 1.0) {
        v = 1.0;
        ++clipped;
      }
      features[c] = v;
    }
    double label_value;
    if (!parse_double(cells.back(), label_value) || label_value != std::floor(label_value) ||
        label_value < 0.0) {
      throw ParseError(path.string() + ": row " + std::to_string(row) +
                       " label is not a nonnegative integer");
    }
    const auto label = static_cast<std::size_t>(label_value);
    if (num_classes > 0 && label >= num_classes) {
      throw DomainError(path.string() + ": row " + std::to_string(row) + " label " +
                        std::to_string(label) + " out of range [0, " +
                        std::to_string(num_classes) + ")");
    }
    max_label = std::max(max_label, label);
    samples.push_back({Vector(std::move(features)), label});
  }
  if (samples.empty()) throw ParseError(path.string() + ": no data rows");
  const std::size_t classes = num_classes > 0 ? num_classes : max_label + 1;
  const std::size_t dim = samples.front().x.size();
  return CsvLoadResult{Dataset(std::move(samples), classes, dim, tag), clipped};
}

SyntheticDataset gen_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.dim < 2) {
    throw DomainError("gen_synthetic_dataset: needs classes >= 1 and dim >= 2");
  }
  if (spec.per_class_train == 0 || spec.per_class_test == 0) {
    throw DomainError("gen_synthetic_dataset: per-class counts must be positive");
  }
  if (spec.separation < 0.0) throw DomainError("gen_synthetic_dataset: negative separation");

  // Means on a circle in the first two coordinates; chord length == separation.
  const double radius =
      spec.classes == 1 ? 0.0
                        : spec.separation / (2.0 * std::sin(std::numbers::pi /
                                                            static_cast<double>(spec.classes)));
  std::vector<std::array<double, 2>> means(spec.classes);
  for (std::size_t j = 0; j < spec.classes; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) /
                         static_cast<double>(spec.classes);
    means[j] = {radius * std::cos(theta), radius * std::sin(theta)};
  }

  auto raw_split = [&](std::uint64_t stream_tag, std::size_t per_class) {
    SplitMix64 rng = substream(spec.seed, {0xda7aull, stream_tag});
    std::vector<LabeledSample> out;
    out.reserve(per_class * spec.classes);
    for (std::size_t j = 0; j < spec.classes; ++j) {
      for (std::size_t i = 0; i < per_class; ++i) {
        std::vector<double> x(spec.dim);
        for (std::size_t d = 0; d < spec.dim; ++d) {
          x[d] = rng.next_gaussian();
          if (d < 2) x[d] += means[j][d];
        }
        out.push_back({Vector(std::move(x)), j});
      }
    }
    return out;
  };

  std::vector<LabeledSample> train = raw_split(0, spec.per_class_train);
  std::vector<LabeledSample> test = raw_split(1, spec.per_class_test);

  double lo = train.front().x[0];
  double hi = lo;
  for (const auto* split : {&train, &test}) {
    for (const LabeledSample& s : *split) {
      for (double v : s.x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  const double range = hi - lo;
  if (range < 1e-12) throw DegenerateError("gen_synthetic_dataset: degenerate value range");
  for (auto* split : {&train, &test}) {
    for (LabeledSample& s : *split) {
      for (double& v : s.x.span()) v = (v - lo) / range;
    }
  }

  return SyntheticDataset{Dataset(std::move(train), spec.classes, spec.dim, SplitTag::train),
                          Dataset(std::move(test), spec.classes, spec.dim, SplitTag::test)};
}

}  // namespace afrg
