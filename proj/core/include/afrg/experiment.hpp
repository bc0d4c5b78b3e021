#ifndef AFRG_EXPERIMENT_HPP
#define AFRG_EXPERIMENT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "afrg/evaluation.hpp"
#include "afrg/io.hpp"

namespace afrg {

//! Flat key-value text config: one `key = value` per line, `#` comments,
//! dotted section prefixes (data.*, train.*, decoder.*, attack.*, out.*).
//! Getter diagnostics name the offending key.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "config");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

//! Default sweep of attack magnitudes.
const std::vector<double>& default_epsilons();

//! Train/test pair resolved from the data.* section (synthetic or csv).
SyntheticDataset dataset_from_config(const KeyValueConfig& cfg);

TrainConfig train_config_from(const KeyValueConfig& cfg, std::uint64_t seed, std::size_t input_dim,
                              std::size_t num_classes);

DecoderSpec decoder_spec_from(const KeyValueConfig& cfg, std::uint64_t seed,
                              std::size_t num_classes, std::size_t input_dim);

//! Attack configuration for one kind at one magnitude, honoring attack.*
//! overrides (steps, cw constants, boundary scales, rng seed).
AttackConfig attack_config_from(const KeyValueConfig& cfg, AttackKind kind, double epsilon);

struct FiveModelArtifacts {
  std::filesystem::path report_csv;
  std::filesystem::path summary_json;
  std::filesystem::path accuracy_csv;
};

//! Trains two masters with seeds train.seed_p / train.seed_q, derives three
//! decoder-composed copies, sweeps the configured attacks over the epsilon
//! list, and writes the replication tables. Byte-reproducible per config.
FiveModelArtifacts run_five_model_pipeline(const KeyValueConfig& cfg, std::ostream* log = nullptr);

struct CollusionArtifacts {
  std::filesystem::path report_csv;
  std::filesystem::path summary_json;
};

struct CollusionSweep {
  std::vector<std::size_t> r_values;
  std::vector<CollusionReport> retraining;  // colluders share only the training recipe
  std::vector<CollusionReport> attractor;   // each retrained copy also carries a decoder
};

//! Ensemble attacks for every r in collusion.r_list under both copy-generation
//! methods, against a fixed held-out victim.
CollusionSweep run_collusion_sweep(const KeyValueConfig& cfg, std::ostream* log = nullptr);
CollusionArtifacts run_collusion_pipeline(const KeyValueConfig& cfg, std::ostream* log = nullptr);

//! CSV cell for an optional rate ("na" when absent).
std::string format_rate(const std::optional<double>& rate);

}  // namespace afrg

#endif  // AFRG_EXPERIMENT_HPP
