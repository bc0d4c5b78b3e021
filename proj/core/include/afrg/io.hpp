#ifndef AFRG_IO_HPP
#define AFRG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afrg/attractor.hpp"
#include "afrg/model.hpp"
#include "afrg/training.hpp"

namespace afrg {

// Model files: magic "AFRG", u16 version, u32 input_dim / num_classes / layer
// count, then per layer u32 rows, u32 cols, u8 activation code, weights
// (row-major) and bias as little-endian 64-bit floats. Save/load round-trips
// bit-exactly; writes go through a temp file and rename.
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

//! Seed plus hyperparameters; enough to regenerate a decoder bit-identically.
//! The expanded messages are never persisted. Treat these files as secrets.
struct DecoderSpec {
  enum class Kind : std::uint8_t { spread_spectrum = 0, qim = 1 };
  Kind kind = Kind::qim;
  std::uint64_t seed = 0;
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  double gain = kDefaultSpreadGain;                    // spread spectrum
  std::size_t projections = kDefaultQimProjections;    // qim
  double step = kDefaultQimStep;                       // qim
  std::vector<double> weights;                         // qim; empty -> uniform
};

AttractorDecoder realize_decoder(const DecoderSpec& spec);

// Decoder spec files: magic "AFRD", u16 version, u8 kind, u64 seed,
// u32 num_classes, u32 input_dim, then the kind-specific hyperparameters.
void save_decoder_spec(const DecoderSpec& spec, const std::filesystem::path& path);
DecoderSpec load_decoder_spec(const std::filesystem::path& path);

// Dataset CSV: one row per sample, input_dim feature columns then the integer
// label; optional header. Values are printed with 17 significant digits.
void save_csv_dataset(const Dataset& data, const std::filesystem::path& path);

struct CsvLoadResult {
  Dataset dataset;
  std::size_t clipped_values = 0;  // entries pulled into [0,1] during load
};

//! num_classes == 0 infers the class count from the largest label.
CsvLoadResult load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes = 0,
                               SplitTag tag = SplitTag::train);

//! Seeded Gaussian blobs. Class means sit on a circle in the first two
//! coordinates with pairwise distance >= separation (unit per-coordinate
//! noise), then every entry is squashed into [0,1] by one affine rescale
//! shared across both splits.
struct SyntheticSpec {
  std::size_t classes = 3;
  std::size_t dim = 64;
  std::size_t per_class_train = 1000;
  std::size_t per_class_test = 334;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  Dataset train;
  Dataset test;
};

SyntheticDataset gen_synthetic_dataset(const SyntheticSpec& spec);

//! Shortest representation that round-trips a double (17 significant digits).
std::string format_double(double v);

//! Write-temp-then-rename so readers never observe partial files.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace afrg

#endif  // AFRG_IO_HPP
