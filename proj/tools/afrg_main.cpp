// afrg: train seeded classifier copies, rewrite them with decoder attractors,
// and measure how adversarial attacks replicate across the copies.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "afrg/error.hpp"
#include "afrg/experiment.hpp"

using namespace afrg;
namespace fs = std::filesystem;

namespace {

//! Loads a model, optionally composed with a decoder spec file.
struct LoadedSurface {
  Model model;
  std::optional<PiecedModel> pieced;
  std::unique_ptr<AttackableModel> surface;
};

LoadedSurface load_surface(const std::string& model_path, const std::string& decoder_path) {
  LoadedSurface out{load_model(model_path), std::nullopt, nullptr};
  if (!decoder_path.empty()) {
    DecoderSpec spec = load_decoder_spec(decoder_path);
    out.pieced = piece_together(std::make_shared<const Model>(out.model),
                                realize_decoder(spec));
    out.surface = std::make_unique<PiecedSurface>(*out.pieced);
  } else {
    out.surface = std::make_unique<ModelSurface>(out.model);
  }
  return out;
}

Dataset load_test_data(const std::string& path, std::size_t classes) {
  CsvLoadResult result = load_csv_dataset(path, classes, SplitTag::test);
  if (result.clipped_values > 0) {
    std::cerr << "note: clipped " << result.clipped_values << " values into [0,1] from " << path
              << "\n";
  }
  return std::move(result.dataset);
}

std::vector<std::size_t> parse_arch(const std::string& arch) {
  std::vector<std::size_t> widths;
  std::size_t start = 0;
  while (start <= arch.size()) {
    const std::size_t comma = arch.find(',', start);
    const std::string cell = arch.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!cell.empty()) widths.push_back(std::stoul(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return widths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seeded model diversification and attack replication toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic blob dataset (train/test CSV)");
  SyntheticSpec gen_spec;
  std::string gen_out = ".";
  gen->add_option("--classes", gen_spec.classes, "number of classes");
  gen->add_option("--dim", gen_spec.dim, "input dimension");
  gen->add_option("--per-class-train", gen_spec.per_class_train, "train samples per class");
  gen->add_option("--per-class-test", gen_spec.per_class_test, "test samples per class");
  gen->add_option("--separation", gen_spec.separation, "class mean separation in noise units");
  gen->add_option("--seed", gen_spec.seed, "generator seed");
  gen->add_option("--out-dir", gen_out, "output directory for train.csv/test.csv");

  // train
  auto* tr = app.add_subcommand("train", "train a master copy from a CSV dataset");
  std::string tr_train, tr_test, tr_arch = "", tr_out = "model.bin";
  TrainConfig tr_cfg;
  tr->add_option("--train", tr_train, "training CSV")->required();
  tr->add_option("--test", tr_test, "optional test CSV for an accuracy report");
  tr->add_option("--arch", tr_arch, "comma-separated widths, input first (default input,32,classes)");
  tr->add_option("--seed", tr_cfg.seed, "training seed");
  tr->add_option("--epochs", tr_cfg.epochs, "epochs");
  tr->add_option("--batch-size", tr_cfg.batch_size, "minibatch size");
  tr->add_option("--learning-rate", tr_cfg.learning_rate, "SGD learning rate");
  tr->add_option("--momentum", tr_cfg.momentum, "SGD momentum");
  tr->add_option("--out", tr_out, "output model file");

  // inject
  auto* inj = app.add_subcommand("inject", "derive a decoder spec for a model copy");
  std::string inj_model, inj_kind = "qim", inj_out = "copy.decoder";
  std::uint64_t inj_seed = 0;
  std::size_t inj_projections = kDefaultQimProjections;
  double inj_step = kDefaultQimStep, inj_gain = kDefaultSpreadGain;
  inj->add_option("--model", inj_model, "master model file")->required();
  inj->add_option("--kind", inj_kind, "decoder kind: qim or spread");
  inj->add_option("--seed", inj_seed, "secret decoder seed")->required();
  inj->add_option("--projections", inj_projections, "qim projections per class");
  inj->add_option("--step", inj_step, "qim lattice step");
  inj->add_option("--gain", inj_gain, "spread spectrum gain");
  inj->add_option("--out", inj_out, "output decoder spec file");

  // attack
  auto* att = app.add_subcommand("attack", "run one attack against one model copy");
  std::string att_model, att_decoder, att_test, att_kind = "fgsm", att_out;
  double att_eps = 0.1;
  std::uint64_t att_seed = 7;
  std::size_t att_limit = 0, att_steps = 0;
  att->add_option("--model", att_model, "model file")->required();
  att->add_option("--decoder", att_decoder, "optional decoder spec to compose");
  att->add_option("--test", att_test, "test CSV")->required();
  att->add_option("--attack", att_kind, "fgsm|fgm|pgd_l2|pgd_linf|deepfool|cw|boundary");
  att->add_option("--epsilon", att_eps, "attack magnitude / budget");
  att->add_option("--steps", att_steps, "iteration override (0 = default)");
  att->add_option("--seed", att_seed, "attack rng seed");
  att->add_option("--limit", att_limit, "cap on samples (0 = all)");
  att->add_option("--out", att_out, "optional CSV of per-sample outcomes");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run the five-copy replication pipeline from a config");
  std::string ev_config;
  ev->add_option("--config", ev_config, "experiment config file")->required();

  // gradsim
  auto* gs = app.add_subcommand("gradsim", "gradient cosine similarity between two copies");
  std::string gs_model_a, gs_decoder_a, gs_model_b, gs_decoder_b, gs_test, gs_out;
  gs->add_option("--model-a", gs_model_a, "first model file")->required();
  gs->add_option("--decoder-a", gs_decoder_a, "optional decoder for the first model");
  gs->add_option("--model-b", gs_model_b, "second model file")->required();
  gs->add_option("--decoder-b", gs_decoder_b, "optional decoder for the second model");
  gs->add_option("--test", gs_test, "test CSV")->required();
  gs->add_option("--out", gs_out, "optional CSV of per-sample cosines");

  // collude
  auto* co = app.add_subcommand("collude", "ensemble collusion sweep from a config");
  std::string co_config;
  co->add_option("--config", co_config, "experiment config file")->required();

  // boundary-map
  auto* bm = app.add_subcommand("boundary-map", "class grid of a 2D model over a box");
  std::string bm_model, bm_decoder, bm_out = "grid.csv";
  double bm_x0 = 0.0, bm_y0 = 0.0, bm_x1 = 1.0, bm_y1 = 1.0;
  std::size_t bm_res = 200;
  bm->add_option("--model", bm_model, "model file")->required();
  bm->add_option("--decoder", bm_decoder, "optional decoder spec to compose");
  bm->add_option("--x-min", bm_x0, "box lower x");
  bm->add_option("--y-min", bm_y0, "box lower y");
  bm->add_option("--x-max", bm_x1, "box upper x");
  bm->add_option("--y-max", bm_y1, "box upper y");
  bm->add_option("--resolution", bm_res, "cells per axis");
  bm->add_option("--out", bm_out, "output CSV grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      SyntheticDataset data = gen_synthetic_dataset(gen_spec);
      fs::create_directories(gen_out);
      save_csv_dataset(data.train, fs::path(gen_out) / "train.csv");
      save_csv_dataset(data.test, fs::path(gen_out) / "test.csv");
      std::cout << "wrote " << data.train.size() << " train / " << data.test.size()
                << " test samples to " << gen_out << "\n";
    } else if (tr->parsed()) {
      CsvLoadResult train_data = load_csv_dataset(tr_train, 0, SplitTag::train);
      if (tr_arch.empty()) {
        tr_cfg.architecture = {train_data.dataset.input_dim(), 32,
                               train_data.dataset.num_classes()};
      } else {
        tr_cfg.architecture = parse_arch(tr_arch);
      }
      Model m = train(train_data.dataset, tr_cfg);
      save_model(m, tr_out);
      std::cout << "wrote " << tr_out << "\n";
      if (!tr_test.empty()) {
        Dataset test = load_test_data(tr_test, train_data.dataset.num_classes());
        ModelSurface s(m);
        std::cout << "test accuracy: " << format_double(evaluate_accuracy(s, test)) << "\n";
      }
    } else if (inj->parsed()) {
      Model m = load_model(inj_model);
      DecoderSpec spec;
      if (inj_kind == "qim") {
        spec.kind = DecoderSpec::Kind::qim;
      } else if (inj_kind == "spread" || inj_kind == "spread_spectrum") {
        spec.kind = DecoderSpec::Kind::spread_spectrum;
      } else {
        throw DomainError("inject: --kind must be qim or spread, got `" + inj_kind + "`");
      }
      spec.seed = inj_seed;
      spec.num_classes = m.num_classes();
      spec.input_dim = m.input_dim();
      spec.projections = inj_projections;
      spec.step = inj_step;
      spec.gain = inj_gain;
      PiecedModel check = piece_together(std::make_shared<const Model>(m), realize_decoder(spec));
      (void)check;  // validates dimensions before anything is written
      save_decoder_spec(spec, inj_out);
      std::cout << "wrote " << inj_out << " (compose with " << inj_model << ")\n";
    } else if (att->parsed()) {
      LoadedSurface src = load_surface(att_model, att_decoder);
      Dataset test = load_test_data(att_test, src.model.num_classes());
      const auto kind = attack_kind_from_name(att_kind);
      if (!kind) throw DomainError("attack: unknown --attack `" + att_kind + "`");
      AttackConfig cfg;
      cfg.kind = *kind;
      cfg.epsilon = att_eps;
      cfg.steps = att_steps;
      cfg.rng_seed = att_seed;
      std::span<const LabeledSample> samples = test.samples();
      if (att_limit > 0 && att_limit < samples.size()) samples = samples.subspan(0, att_limit);
      DispatchResult run = attack_dispatch(*src.surface, samples, cfg);
      if (run.outcomes.empty()) {
        std::cout << "no correctly classified samples to attack\n";
        return 0;
      }
      ReplicationReport self = replicate(run.outcomes, *src.surface, *src.surface, run.samples);
      std::cout << "attacked " << run.outcomes.size() << "/" << run.n_input << " samples\n"
                << "initial success rate: " << format_double(self.initial_rate) << "\n"
                << "avg l2: " << format_double(self.avg_l2)
                << "  avg linf: " << format_double(self.avg_linf) << "\n";
      if (!att_out.empty()) {
        std::string csv = "index,success,l2,linf,iterations\n";
        for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
          const AttackOutcome& o = run.outcomes[i];
          csv += std::to_string(i) + "," + (o.success ? "1" : "0") + "," +
                 format_double(o.l2_dist) + "," + format_double(o.linf_dist) + "," +
                 std::to_string(o.iterations_used) + "\n";
        }
        atomic_write_file(att_out, csv);
        std::cout << "wrote " << att_out << "\n";
      }
    } else if (ev->parsed()) {
      FiveModelArtifacts artifacts =
          run_five_model_pipeline(KeyValueConfig::from_file(ev_config), &std::cout);
      std::cout << "wrote " << artifacts.report_csv << "\n"
                << "wrote " << artifacts.summary_json << "\n"
                << "wrote " << artifacts.accuracy_csv << "\n";
    } else if (gs->parsed()) {
      LoadedSurface a = load_surface(gs_model_a, gs_decoder_a);
      LoadedSurface b = load_surface(gs_model_b, gs_decoder_b);
      Dataset test = load_test_data(gs_test, a.model.num_classes());
      GradientSimilarityReport rep = gradient_cosine(*a.surface, *b.surface, test);
      std::cout << "samples: " << rep.cosines.size() << " (degenerate: " << rep.n_degenerate
                << ")\n"
                << "mean cosine: " << format_double(rep.mean) << "\n"
                << "median cosine: " << format_double(rep.median) << "\n";
      if (!gs_out.empty()) {
        std::string csv = "cosine\n";
        for (double c : rep.cosines) csv += format_double(c) + "\n";
        atomic_write_file(gs_out, csv);
        std::cout << "wrote " << gs_out << "\n";
      }
    } else if (co->parsed()) {
      CollusionArtifacts artifacts =
          run_collusion_pipeline(KeyValueConfig::from_file(co_config), &std::cout);
      std::cout << "wrote " << artifacts.report_csv << "\n"
                << "wrote " << artifacts.summary_json << "\n";
    } else if (bm->parsed()) {
      LoadedSurface m = load_surface(bm_model, bm_decoder);
      BoundaryGrid grid = boundary_map(*m.surface, {bm_x0, bm_y0}, {bm_x1, bm_y1}, bm_res);
      std::string csv;
      for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
        for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
          if (ix > 0) csv += ',';
          csv += std::to_string(grid.at(iy, ix));
        }
        csv += '\n';
      }
      atomic_write_file(bm_out, csv);
      std::cout << "wrote " << bm_out << " (" << grid.resolution << "x" << grid.resolution
                << ")\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
