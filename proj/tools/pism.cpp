#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "pism/commands.hpp"
#include "pism/csv.hpp"

// Subcommands: synth, train, eval-cls, eval-reg, sweep-small-data,
// dump-components, export-latents. Every subcommand accepts --config
// <file.json> with flat keys named like the long flags; explicit flags win
// over config values. PISM_THREADS overrides the OpenMP thread count.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

namespace {

using pism::cmd::UsageError;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json();
  std::ifstream in(path);
  if (!in) throw UsageError("config file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  return j;
}

// flags win over config-file values
struct CfgApplier {
  nlohmann::json j;
  CLI::App* sub;

  template <typename T>
  void operator()(const std::string& flag, const std::string& key, T& target) {
    if (j.is_object() && sub->count(flag) == 0 && j.contains(key)) {
      try {
        target = j.at(key).get<T>();
      } catch (const nlohmann::json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
      }
    }
  }
};

std::vector<std::pair<int, int>> parse_pixel_list(
    const std::vector<std::string>& tokens) {
  std::vector<std::pair<int, int>> out;
  for (const std::string& t : tokens) {
    const auto comma = t.find(',');
    if (comma == std::string::npos) {
      throw UsageError("pixel must be row,col: '" + t + "'");
    }
    out.emplace_back(
        static_cast<int>(pism::csv::parse_int(t.substr(0, comma))),
        static_cast<int>(pism::csv::parse_int(t.substr(comma + 1))));
  }
  return out;
}

void add_forest_flags(CLI::App* sub, pism::ForestParams& p) {
  sub->add_option("--trees", p.n_trees, "number of trees");
  sub->add_option("--max-depth", p.max_depth, "maximum tree depth");
  sub->add_option("--min-leaf", p.min_samples_leaf, "minimum samples per leaf");
  sub->add_option("--mtry", p.mtry, "features per split (0 = auto)");
  sub->add_flag("--no-bootstrap{false}", p.bootstrap,
                "fit each tree on the full sample");
}

void apply_forest_config(CfgApplier& cfg, pism::ForestParams& p) {
  cfg("--trees", "trees", p.n_trees);
  cfg("--max-depth", "max_depth", p.max_depth);
  cfg("--min-leaf", "min_leaf", p.min_samples_leaf);
  cfg("--mtry", "mtry", p.mtry);
}

void add_train_flags(CLI::App* sub, pism::TrainConfig& t) {
  sub->add_option("--lr", t.learning_rate, "learning rate");
  sub->add_option("--epochs", t.max_epochs, "maximum epochs");
  sub->add_option("--patience", t.patience, "early-stopping patience");
  sub->add_option("--batch-size", t.batch_size, "pixels per batch");
  sub->add_option("--huber-delta", t.huber_delta, "Huber transition point");
  sub->add_option("--weight-decay", t.weight_decay, "decoupled weight decay");
  sub->add_option("--val-fraction", t.validation_fraction,
                  "held-out validation fraction");
  sub->add_option("--seed", t.seed, "training seed");
  sub->add_option("--hidden", t.hidden, "hidden layer widths")
      ->delimiter(',');
}

void apply_train_config(CfgApplier& cfg, pism::TrainConfig& t) {
  cfg("--lr", "lr", t.learning_rate);
  cfg("--epochs", "epochs", t.max_epochs);
  cfg("--patience", "patience", t.patience);
  cfg("--batch-size", "batch_size", t.batch_size);
  cfg("--huber-delta", "huber_delta", t.huber_delta);
  cfg("--weight-decay", "weight_decay", t.weight_decay);
  cfg("--val-fraction", "val_fraction", t.validation_fraction);
  cfg("--seed", "seed", t.seed);
  cfg("--hidden", "hidden", t.hidden);
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("PISM_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{"self-supervised spectral autoencoder with a parameter-free "
               "skew-normal renderer"};
  app.require_subcommand(1);

  std::string config_path;

  // --- synth -----------------------------------------------------------
  pism::cmd::SynthArgs synth;
  CLI::App* s_synth = app.add_subcommand("synth", "generate a synthetic cube");
  s_synth->add_option("--out", synth.out_prefix, "output path prefix");
  s_synth->add_option("--seed", synth.seed, "generator seed");
  s_synth->add_option("--pixels", synth.pixels, "pixel count");
  s_synth->add_option("--bands", synth.bands, "band count");
  s_synth->add_option("--k", synth.k, "components per pixel");
  s_synth->add_option("--classes", synth.classes,
                      "class count (0 = unlabeled)");
  s_synth->add_option("--noise-sd", synth.noise_sd, "noise std deviation");
  s_synth->add_flag("--shared-shape", synth.shared_shape,
                    "one shared (mu, sigma, alpha) set, per-pixel scales");
  s_synth->add_option("--config", config_path, "JSON config file");
  s_synth->callback([&] {
    CfgApplier cfg{load_config(config_path), s_synth};
    cfg("--out", "out", synth.out_prefix);
    cfg("--seed", "seed", synth.seed);
    cfg("--pixels", "pixels", synth.pixels);
    cfg("--bands", "bands", synth.bands);
    cfg("--k", "k", synth.k);
    cfg("--classes", "classes", synth.classes);
    cfg("--noise-sd", "noise_sd", synth.noise_sd);
    cfg("--shared-shape", "shared_shape", synth.shared_shape);
    pism::cmd::cmd_synth(synth);
  });

  // --- train -----------------------------------------------------------
  pism::cmd::TrainArgs train;
  CLI::App* s_train = app.add_subcommand("train", "self-supervised training");
  s_train->add_option("--cube", train.cube, "cube header path");
  s_train->add_flag("--synthetic", train.synthetic,
                    "train on a generated synthetic cube");
  s_train->add_option("--pixels", train.synth.pixels, "synthetic pixel count");
  s_train->add_option("--bands", train.synth.bands, "synthetic band count");
  s_train->add_option("--classes", train.synth.classes, "synthetic classes");
  s_train->add_option("--noise-sd", train.synth.noise_sd, "synthetic noise");
  s_train->add_flag("--shared-shape", train.synth.shared_shape,
                    "synthetic shared component shapes");
  s_train->add_option("--k", train.k, "components per pixel");
  s_train->add_option("--variant", train.variant, "full | fixed");
  s_train->add_option("--out", train.out_dir, "output directory");
  s_train->add_option("--resume", train.resume, "checkpoint manifest to resume");
  add_train_flags(s_train, train.train);
  s_train->add_option("--config", config_path, "JSON config file");
  s_train->callback([&] {
    CfgApplier cfg{load_config(config_path), s_train};
    cfg("--cube", "cube", train.cube);
    cfg("--synthetic", "synthetic", train.synthetic);
    cfg("--pixels", "pixels", train.synth.pixels);
    cfg("--bands", "bands", train.synth.bands);
    cfg("--classes", "classes", train.synth.classes);
    cfg("--noise-sd", "noise_sd", train.synth.noise_sd);
    cfg("--k", "k", train.k);
    cfg("--variant", "variant", train.variant);
    cfg("--out", "out", train.out_dir);
    cfg("--resume", "resume", train.resume);
    apply_train_config(cfg, train.train);
    train.synth.seed = train.train.seed;
    train.synth.k = train.k;
    train.train.variant = train.variant == "fixed" ? pism::Variant::kFixed
                                                   : pism::Variant::kFull;
    pism::cmd::cmd_train(train);
  });

  // --- eval-cls --------------------------------------------------------
  pism::cmd::EvalClsArgs ecls;
  CLI::App* s_ecls =
      app.add_subcommand("eval-cls", "latent-based pixel classification");
  s_ecls->add_option("--model-dir", ecls.model_dir, "train output directory");
  s_ecls->add_option("--cube", ecls.cube, "cube header path");
  s_ecls->add_option("--labels", ecls.labels, "labels CSV");
  s_ecls->add_option("--split", ecls.split, "pixel split CSV");
  s_ecls->add_option("--seeds", ecls.seeds, "forest seeds")->delimiter(',');
  s_ecls->add_option("--out", ecls.out_dir, "output directory");
  add_forest_flags(s_ecls, ecls.forest);
  s_ecls->add_option("--config", config_path, "JSON config file");
  s_ecls->callback([&] {
    CfgApplier cfg{load_config(config_path), s_ecls};
    cfg("--model-dir", "model_dir", ecls.model_dir);
    cfg("--cube", "cube", ecls.cube);
    cfg("--labels", "labels", ecls.labels);
    cfg("--split", "split", ecls.split);
    cfg("--seeds", "seeds", ecls.seeds);
    cfg("--out", "out", ecls.out_dir);
    apply_forest_config(cfg, ecls.forest);
    pism::cmd::cmd_eval_classification(ecls);
  });

  // --- sweep-small-data --------------------------------------------------
  pism::cmd::SweepArgs sweep;
  CLI::App* s_sweep = app.add_subcommand(
      "sweep-small-data", "classification over stratified train subsets");
  s_sweep->add_option("--model-dir", sweep.eval.model_dir,
                      "train output directory");
  s_sweep->add_option("--cube", sweep.eval.cube, "cube header path");
  s_sweep->add_option("--labels", sweep.eval.labels, "labels CSV");
  s_sweep->add_option("--split", sweep.eval.split, "pixel split CSV");
  s_sweep->add_option("--seeds", sweep.eval.seeds, "forest seeds")
      ->delimiter(',');
  s_sweep->add_option("--fractions", sweep.fractions, "train-set fractions")
      ->delimiter(',');
  s_sweep->add_option("--out", sweep.eval.out_dir, "output directory");
  add_forest_flags(s_sweep, sweep.eval.forest);
  s_sweep->add_option("--config", config_path, "JSON config file");
  s_sweep->callback([&] {
    CfgApplier cfg{load_config(config_path), s_sweep};
    cfg("--model-dir", "model_dir", sweep.eval.model_dir);
    cfg("--cube", "cube", sweep.eval.cube);
    cfg("--labels", "labels", sweep.eval.labels);
    cfg("--split", "split", sweep.eval.split);
    cfg("--seeds", "seeds", sweep.eval.seeds);
    cfg("--fractions", "fractions", sweep.fractions);
    cfg("--out", "out", sweep.eval.out_dir);
    apply_forest_config(cfg, sweep.eval.forest);
    pism::cmd::cmd_small_data_sweep(sweep);
  });

  // --- eval-reg --------------------------------------------------------
  pism::cmd::EvalRegArgs ereg;
  CLI::App* s_ereg =
      app.add_subcommand("eval-reg", "patch-level latent regression");
  s_ereg->add_option("--model-dir", ereg.model_dir, "train output directory");
  s_ereg->add_option("--cube", ereg.cube, "cube header path");
  s_ereg->add_option("--patches", ereg.patches, "patch membership CSV");
  s_ereg->add_option("--targets", ereg.targets, "patch targets CSV");
  s_ereg->add_option("--split", ereg.split, "patch split CSV");
  s_ereg->add_option("--seeds", ereg.seeds, "forest seeds")->delimiter(',');
  s_ereg->add_option("--baselines", ereg.baselines,
                     "per-variable baseline MSEs")
      ->delimiter(',');
  s_ereg->add_option("--out", ereg.out_dir, "output directory");
  add_forest_flags(s_ereg, ereg.forest);
  s_ereg->add_option("--config", config_path, "JSON config file");
  s_ereg->callback([&] {
    CfgApplier cfg{load_config(config_path), s_ereg};
    cfg("--model-dir", "model_dir", ereg.model_dir);
    cfg("--cube", "cube", ereg.cube);
    cfg("--patches", "patches", ereg.patches);
    cfg("--targets", "targets", ereg.targets);
    cfg("--split", "split", ereg.split);
    cfg("--seeds", "seeds", ereg.seeds);
    cfg("--baselines", "baselines", ereg.baselines);
    cfg("--out", "out", ereg.out_dir);
    apply_forest_config(cfg, ereg.forest);
    pism::cmd::cmd_eval_regression(ereg);
  });

  // --- dump-components ---------------------------------------------------
  pism::cmd::DumpArgs dump;
  std::vector<std::string> pixel_tokens;
  CLI::App* s_dump = app.add_subcommand(
      "dump-components", "per-pixel component curves as CSV");
  s_dump->add_option("--model-dir", dump.model_dir, "train output directory");
  s_dump->add_option("--cube", dump.cube, "cube header path");
  s_dump->add_option("--pixels", pixel_tokens, "pixels as row,col tokens");
  s_dump->add_option("--out", dump.out_dir, "output directory");
  s_dump->add_option("--config", config_path, "JSON config file");
  s_dump->callback([&] {
    CfgApplier cfg{load_config(config_path), s_dump};
    cfg("--model-dir", "model_dir", dump.model_dir);
    cfg("--cube", "cube", dump.cube);
    cfg("--pixels", "pixels", pixel_tokens);
    cfg("--out", "out", dump.out_dir);
    dump.pixels = parse_pixel_list(pixel_tokens);
    pism::cmd::cmd_dump_components(dump);
  });

  // --- export-latents ----------------------------------------------------
  pism::cmd::ExportLatentsArgs exp;
  CLI::App* s_exp = app.add_subcommand("export-latents",
                                       "latent features as CSV");
  s_exp->add_option("--model-dir", exp.model_dir, "train output directory");
  s_exp->add_option("--cube", exp.cube, "cube header path");
  s_exp->add_option("--patches", exp.patches,
                    "patch membership CSV (averages per patch)");
  s_exp->add_option("--out", exp.out_csv, "output CSV path");
  s_exp->add_option("--config", config_path, "JSON config file");
  s_exp->callback([&] {
    CfgApplier cfg{load_config(config_path), s_exp};
    cfg("--model-dir", "model_dir", exp.model_dir);
    cfg("--cube", "cube", exp.cube);
    cfg("--patches", "patches", exp.patches);
    cfg("--out", "out", exp.out_csv);
    pism::cmd::cmd_export_latents(exp);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
