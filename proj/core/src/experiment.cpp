#include "afrg/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "afrg/error.hpp"

namespace afrg {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = value.find(',', start);
    if (comma == std::string::npos) {
      const std::string cell = trimmed(value.substr(start));
      if (!cell.empty()) out.push_back(cell);
      return out;
    }
    const std::string cell = trimmed(value.substr(start, comma - start));
    if (!cell.empty()) out.push_back(cell);
    start = comma + 1;
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path.string());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trimmed(line);
    if (content.empty()) continue;
    const std::size_t eq = content.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ": line " + std::to_string(line_no) + " is not `key = value`");
    }
    const std::string key = trimmed(content.substr(0, eq));
    const std::string value = trimmed(content.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin + ": line " + std::to_string(line_no) + " has an empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ParseError(origin_ + ": missing key `" + key + "`");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

namespace {

double parse_double_or_throw(const std::string& origin, const std::string& key,
                             const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ParseError(origin + ": key `" + key + "` is not a number: `" + value + "`");
  }
  return v;
}

std::uint64_t parse_u64_or_throw(const std::string& origin, const std::string& key,
                                 const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ParseError(origin + ": key `" + key + "` is not an unsigned integer: `" + value + "`");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace

double KeyValueConfig::get_double(const std::string& key) const {
  return parse_double_or_throw(origin_, key, get_string(key));
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::size_t KeyValueConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(parse_u64_or_throw(origin_, key, get_string(key)));
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  return has(key) ? get_size(key) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key) const {
  return parse_u64_or_throw(origin_, key, get_string(key));
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const std::string& cell : split_list(get_string(key))) {
    out.push_back(parse_double_or_throw(origin_, key, cell));
  }
  if (out.empty()) throw ParseError(origin_ + ": key `" + key + "` has an empty list");
  return out;
}

std::vector<std::size_t> KeyValueConfig::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const std::string& cell : split_list(get_string(key))) {
    out.push_back(static_cast<std::size_t>(parse_u64_or_throw(origin_, key, cell)));
  }
  if (out.empty()) throw ParseError(origin_ + ": key `" + key + "` has an empty list");
  return out;
}

const std::vector<double>& default_epsilons() {
  static const std::vector<double> eps = {0.001, 0.01, 0.03, 0.1, 0.3, 0.5, 1.0};
  return eps;
}

SyntheticDataset dataset_from_config(const KeyValueConfig& cfg) {
  const std::string kind = cfg.get_string("data.kind", "synthetic");
  if (kind == "synthetic") {
    SyntheticSpec spec;
    spec.classes = cfg.get_size("data.classes", 3);
    spec.dim = cfg.get_size("data.dim", 64);
    spec.per_class_train = cfg.get_size("data.per_class_train", 1000);
    spec.per_class_test = cfg.get_size("data.per_class_test", 334);
    spec.separation = cfg.get_double("data.separation", 4.0);
    spec.seed = cfg.get_u64("data.seed", 1337);
    return gen_synthetic_dataset(spec);
  }
  if (kind == "csv") {
    const std::size_t classes = cfg.get_size("data.classes", 0);
    CsvLoadResult train =
        load_csv_dataset(cfg.get_string("data.train_csv"), classes, SplitTag::train);
    CsvLoadResult test = load_csv_dataset(cfg.get_string("data.test_csv"),
                                          classes > 0 ? classes : train.dataset.num_classes(),
                                          SplitTag::test);
    return SyntheticDataset{std::move(train.dataset), std::move(test.dataset)};
  }
  throw ParseError("config: key `data.kind` must be `synthetic` or `csv`, got `" + kind + "`");
}

TrainConfig train_config_from(const KeyValueConfig& cfg, std::uint64_t seed, std::size_t input_dim,
                              std::size_t num_classes) {
  TrainConfig tc;
  tc.seed = seed;
  tc.epochs = cfg.get_size("train.epochs", 12);
  tc.batch_size = cfg.get_size("train.batch_size", 32);
  tc.learning_rate = cfg.get_double("train.learning_rate", 0.05);
  tc.momentum = cfg.get_double("train.momentum", 0.9);
  tc.architecture = cfg.get_size_list("train.arch", {input_dim, 32, num_classes});
  return tc;
}

DecoderSpec decoder_spec_from(const KeyValueConfig& cfg, std::uint64_t seed,
                              std::size_t num_classes, std::size_t input_dim) {
  DecoderSpec spec;
  const std::string kind = cfg.get_string("decoder.kind", "qim");
  if (kind == "qim") {
    spec.kind = DecoderSpec::Kind::qim;
  } else if (kind == "spread" || kind == "spread_spectrum") {
    spec.kind = DecoderSpec::Kind::spread_spectrum;
  } else {
    throw ParseError("config: key `decoder.kind` must be `qim` or `spread`, got `" + kind + "`");
  }
  spec.seed = seed;
  spec.num_classes = num_classes;
  spec.input_dim = input_dim;
  spec.gain = cfg.get_double("decoder.gain", kDefaultSpreadGain);
  spec.projections = cfg.get_size("decoder.projections", kDefaultQimProjections);
  spec.step = cfg.get_double("decoder.step", kDefaultQimStep);
  spec.weights = cfg.get_double_list("decoder.weights", {});
  return spec;
}

AttackConfig attack_config_from(const KeyValueConfig& cfg, AttackKind kind, double epsilon) {
  AttackConfig ac;
  ac.kind = kind;
  ac.epsilon = epsilon;
  ac.rng_seed = cfg.get_u64("attack.seed", 7);
  ac.cw_c = cfg.get_double("attack.cw_c", 1.0);
  ac.cw_kappa = cfg.get_double("attack.cw_kappa", 0.0);
  ac.overshoot = cfg.get_double("attack.deepfool_overshoot", 0.02);
  ac.gamma_orth = cfg.get_double("attack.boundary_gamma_orth", 0.01);
  ac.gamma_src = cfg.get_double("attack.boundary_gamma_src", 0.01);
  switch (kind) {
    case AttackKind::pgd_l2:
    case AttackKind::pgd_linf:
      ac.steps = cfg.get_size("attack.pgd_steps", 0);
      ac.step_size = cfg.get_double("attack.pgd_step_size", 0.0);
      break;
    case AttackKind::deepfool:
      ac.steps = cfg.get_size("attack.deepfool_steps", 0);
      break;
    case AttackKind::cw:
      ac.steps = cfg.get_size("attack.cw_steps", 0);
      ac.step_size = cfg.get_double("attack.cw_step_size", 0.0);
      break;
    case AttackKind::boundary:
      ac.steps = cfg.get_size("attack.boundary_steps", 0);
      break;
    default: break;
  }
  return ac;
}

namespace {

std::span<const LabeledSample> limited(const Dataset& data, std::size_t limit) {
  const auto& all = data.samples();
  if (limit == 0 || limit >= all.size()) return all;
  return {all.data(), limit};
}

void append_source_rows(std::string& csv, nlohmann::json& summary, const std::string& attack,
                        double eps, const std::string& tag, const ReplicationReport& rep) {
  const std::string prefix = attack + "," + format_double(eps) + "," + tag + ",";
  csv += prefix + "initial_success_rate," + format_double(rep.initial_rate) + "\n";
  csv += prefix + "avg_l2," + format_double(rep.avg_l2) + "\n";
  csv += prefix + "avg_linf," + format_double(rep.avg_linf) + "\n";
  nlohmann::json& node = summary["attacks"][attack][format_double(eps)][tag];
  node["initial_success_rate"] = rep.initial_rate;
  node["avg_l2"] = rep.avg_l2;
  node["avg_linf"] = rep.avg_linf;
  node["n_outputs"] = rep.n_outputs;
}

void append_pair_rows(std::string& csv, nlohmann::json& summary, const std::string& attack,
                      double eps, const std::string& tag, const ReplicationReport& rep) {
  const std::string prefix = attack + "," + format_double(eps) + "," + tag + ",";
  csv += prefix + "rate_all," + format_double(rep.rate_all) + "\n";
  csv += prefix + "rate_adv," + format_rate(rep.rate_adv) + "\n";
  nlohmann::json& node = summary["attacks"][attack][format_double(eps)][tag];
  node["rate_all"] = rep.rate_all;
  if (rep.rate_adv.has_value()) {
    node["rate_adv"] = *rep.rate_adv;
  } else {
    node["rate_adv"] = nullptr;
  }
  node["n_outputs"] = rep.n_outputs;
  node["n_adversarial_on_source"] = rep.n_adversarial_on_source;
  node["n_misclassified_on_target"] = rep.n_misclassified_on_target;
  node["n_intersection"] = rep.n_intersection;
}

}  // namespace

std::string format_rate(const std::optional<double>& rate) {
  return rate.has_value() ? format_double(*rate) : "na";
}

FiveModelArtifacts run_five_model_pipeline(const KeyValueConfig& cfg, std::ostream* log) {
  const std::filesystem::path out_dir = cfg.get_string("out.dir");
  std::filesystem::create_directories(out_dir);

  SyntheticDataset data = dataset_from_config(cfg);
  const std::size_t dim = data.train.input_dim();
  const std::size_t classes = data.train.num_classes();

  const std::uint64_t seed_p = cfg.get_u64("train.seed_p", 101);
  const std::uint64_t seed_q = cfg.get_u64("train.seed_q", 202);
  if (log) *log << "training master copies (seeds " << seed_p << ", " << seed_q << ")\n";
  Model phi = train(data.train, train_config_from(cfg, seed_p, dim, classes));
  Model psi = train(data.train, train_config_from(cfg, seed_q, dim, classes));

  DecoderSpec spec_k1 = decoder_spec_from(cfg, cfg.get_u64("decoder.seed_k1", 11), classes, dim);
  DecoderSpec spec_k2 = decoder_spec_from(cfg, cfg.get_u64("decoder.seed_k2", 22), classes, dim);

  auto phi_ptr = std::make_shared<const Model>(phi);
  auto psi_ptr = std::make_shared<const Model>(psi);
  PiecedModel phi1 = piece_together(phi_ptr, realize_decoder(spec_k1));
  PiecedModel phi2 = piece_together(phi_ptr, realize_decoder(spec_k2));
  PiecedModel psi2 = piece_together(psi_ptr, realize_decoder(spec_k2));

  save_model(phi, out_dir / "phi.model");
  save_model(psi, out_dir / "psi.model");
  save_decoder_spec(spec_k1, out_dir / "k1.decoder");
  save_decoder_spec(spec_k2, out_dir / "k2.decoder");

  ModelSurface s_phi(phi);
  ModelSurface s_psi(psi);
  PiecedSurface s_phi1(phi1);
  PiecedSurface s_phi2(phi2);
  PiecedSurface s_psi2(psi2);

  // Table 1 analogue: clean test accuracy of the five copies.
  std::string acc_csv = "model,accuracy\n";
  nlohmann::json summary;
  const std::vector<std::pair<std::string, const AttackableModel*>> models = {
      {"phi", &s_phi}, {"psi", &s_psi}, {"phi1", &s_phi1}, {"phi2", &s_phi2}, {"psi2", &s_psi2}};
  for (const auto& [name, surface] : models) {
    const double acc = evaluate_accuracy(*surface, data.test);
    acc_csv += name + "," + format_double(acc) + "\n";
    summary["accuracy"][name] = acc;
    if (log) *log << "accuracy " << name << " = " << acc << "\n";
  }

  const std::vector<double> epsilons = cfg.get_double_list("attack.epsilons", default_epsilons());
  std::vector<AttackKind> kinds;
  {
    std::vector<std::string> names = {"fgsm", "fgm",      "pgd_l2", "pgd_linf",
                                      "deepfool", "cw", "boundary"};
    if (cfg.has("attack.kinds")) {
      names.clear();
      for (const std::string& cell : split_list(cfg.get_string("attack.kinds"))) {
        names.push_back(cell);
      }
    }
    for (const std::string& name : names) {
      const auto kind = attack_kind_from_name(name);
      if (!kind) throw ParseError("config: key `attack.kinds` has unknown attack `" + name + "`");
      kinds.push_back(*kind);
    }
  }
  const std::size_t sample_limit = cfg.get_size("attack.sample_limit", 0);
  std::span<const LabeledSample> samples = limited(data.test, sample_limit);

  std::string csv = "attack,epsilon,pair,metric,value\n";
  for (AttackKind kind : kinds) {
    const std::string attack = attack_kind_name(kind);
    for (double eps : epsilons) {
      AttackConfig ac = attack_config_from(cfg, kind, eps);
      if (log) *log << "attack " << attack << " eps=" << eps << "\n";

      DispatchResult from_phi = attack_dispatch(s_phi, samples, ac);
      if (!from_phi.outcomes.empty()) {
        ReplicationReport to_psi = replicate(from_phi.outcomes, s_phi, s_psi, from_phi.samples);
        append_source_rows(csv, summary, attack, eps, "phi", to_psi);
        append_pair_rows(csv, summary, attack, eps, "phi_to_psi", to_psi);
      }

      DispatchResult from_phi1 = attack_dispatch(s_phi1, samples, ac);
      if (!from_phi1.outcomes.empty()) {
        ReplicationReport to_phi2 =
            replicate(from_phi1.outcomes, s_phi1, s_phi2, from_phi1.samples);
        ReplicationReport to_psi2 =
            replicate(from_phi1.outcomes, s_phi1, s_psi2, from_phi1.samples);
        append_source_rows(csv, summary, attack, eps, "phi1", to_phi2);
        append_pair_rows(csv, summary, attack, eps, "phi1_to_phi2", to_phi2);
        append_pair_rows(csv, summary, attack, eps, "phi1_to_psi2", to_psi2);
      }
    }
  }

  FiveModelArtifacts artifacts{out_dir / "report.csv", out_dir / "summary.json",
                               out_dir / "accuracy.csv"};
  atomic_write_file(artifacts.report_csv, csv);
  atomic_write_file(artifacts.summary_json, summary.dump(2) + "\n");
  atomic_write_file(artifacts.accuracy_csv, acc_csv);
  return artifacts;
}

CollusionSweep run_collusion_sweep(const KeyValueConfig& cfg, std::ostream* log) {
  SyntheticDataset data = dataset_from_config(cfg);
  const std::size_t dim = data.train.input_dim();
  const std::size_t classes = data.train.num_classes();

  CollusionSweep sweep;
  sweep.r_values = cfg.get_size_list("collusion.r_list", {1, 2, 4, 8});
  std::size_t max_r = 0;
  for (std::size_t r : sweep.r_values) {
    if (r == 0) throw ParseError("config: key `collusion.r_list` must not contain 0");
    max_r = std::max(max_r, r);
  }

  const std::uint64_t base_seed = cfg.get_u64("collusion.base_seed", 301);
  const std::uint64_t decoder_seed = cfg.get_u64("collusion.decoder_seed", 401);

  // max_r colluder candidates plus one held-out victim, shared across r values.
  std::vector<Model> masters;
  std::vector<PiecedModel> pieced;
  masters.reserve(max_r + 1);
  pieced.reserve(max_r + 1);
  for (std::size_t i = 0; i <= max_r; ++i) {
    if (log) *log << "training colluder base model " << i << "\n";
    masters.push_back(train(data.train, train_config_from(cfg, base_seed + i, dim, classes)));
  }
  for (std::size_t i = 0; i <= max_r; ++i) {
    DecoderSpec spec = decoder_spec_from(cfg, decoder_seed + i, classes, dim);
    pieced.push_back(piece_together(std::make_shared<const Model>(masters[i]), realize_decoder(spec)));
  }

  std::vector<ModelSurface> master_surfaces;
  std::vector<PiecedSurface> pieced_surfaces;
  master_surfaces.reserve(max_r + 1);
  pieced_surfaces.reserve(max_r + 1);
  for (std::size_t i = 0; i <= max_r; ++i) {
    master_surfaces.emplace_back(masters[i]);
    pieced_surfaces.emplace_back(pieced[i]);
  }

  AttackConfig ac = attack_config_from(cfg, AttackKind::deepfool,
                                       cfg.get_double("collusion.epsilon", 1.0));
  const std::size_t sample_limit = cfg.get_size("collusion.sample_limit", 0);
  std::span<const LabeledSample> samples = limited(data.test, sample_limit);

  for (std::size_t r : sweep.r_values) {
    std::vector<const AttackableModel*> retrain_members;
    std::vector<const AttackableModel*> attractor_members;
    for (std::size_t i = 0; i < r; ++i) {
      retrain_members.push_back(&master_surfaces[i]);
      attractor_members.push_back(&pieced_surfaces[i]);
    }
    if (log) *log << "collusion r=" << r << "\n";
    sweep.retraining.push_back(
        collusion_attack(retrain_members, master_surfaces[max_r], samples, ac));
    sweep.attractor.push_back(
        collusion_attack(attractor_members, pieced_surfaces[max_r], samples, ac));
  }
  return sweep;
}

CollusionArtifacts run_collusion_pipeline(const KeyValueConfig& cfg, std::ostream* log) {
  const std::filesystem::path out_dir = cfg.get_string("out.dir");
  std::filesystem::create_directories(out_dir);

  CollusionSweep sweep = run_collusion_sweep(cfg, log);

  std::string csv = "pipeline,r,initial_rate,rate_all,rate_adv\n";
  nlohmann::json summary;
  for (std::size_t i = 0; i < sweep.r_values.size(); ++i) {
    const std::size_t r = sweep.r_values[i];
    for (const auto& [name, rep] :
         {std::pair<std::string, const CollusionReport*>{"retraining", &sweep.retraining[i]},
          std::pair<std::string, const CollusionReport*>{"attractor", &sweep.attractor[i]}}) {
      csv += name + "," + std::to_string(r) + "," + format_double(rep->initial_rate) + "," +
             format_double(rep->rate_all) + "," + format_rate(rep->rate_adv) + "\n";
      nlohmann::json& node = summary[name][std::to_string(r)];
      node["initial_rate"] = rep->initial_rate;
      node["rate_all"] = rep->rate_all;
      if (rep->rate_adv.has_value()) {
        node["rate_adv"] = *rep->rate_adv;
      } else {
        node["rate_adv"] = nullptr;
      }
      node["n_outputs"] = rep->n_outputs;
      node["n_generation_success"] = rep->n_generation_success;
    }
  }

  CollusionArtifacts artifacts{out_dir / "collusion.csv", out_dir / "collusion.json"};
  atomic_write_file(artifacts.report_csv, csv);
  atomic_write_file(artifacts.summary_json, summary.dump(2) + "\n");
  return artifacts;
}

}  // namespace afrg
