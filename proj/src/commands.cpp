#include "pism/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "pism/csv.hpp"
#include "pism/latent.hpp"
#include "pism/metrics.hpp"
#include "pism/rng.hpp"
#include "pism/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace pism::cmd {

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is required");
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

struct ModelDir {
  EncoderModel model;
  BandMeans means;
};

ModelDir load_model_dir(const std::string& dir) {
  require_file(dir, "model directory");
  const fs::path manifest = fs::path(dir) / "checkpoint" / "manifest.json";
  const fs::path means_csv = fs::path(dir) / "band_means.csv";
  if (!fs::exists(manifest)) {
    throw UsageError("no checkpoint manifest under " + dir);
  }
  if (!fs::exists(means_csv)) {
    throw UsageError("no band_means.csv under " + dir);
  }
  return {load_checkpoint(manifest), load_band_means_csv(means_csv)};
}

struct Agg {
  double mean = 0.0;
  double halfwidth = 0.0;
  bool has_halfwidth = false;
  int n = 0;
};

// normal-approximation 95% interval: mean +- 1.96 * sd / sqrt(n)
Agg aggregate(const std::vector<double>& xs) {
  Agg a;
  a.n = static_cast<int>(xs.size());
  if (a.n == 0) return a;
  a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / a.n;
  if (a.n >= 2) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - a.mean) * (x - a.mean);
    const double sd = std::sqrt(ss / (a.n - 1));
    a.halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(a.n));
    a.has_halfwidth = true;
  }
  return a;
}

ordered_json agg_json(const Agg& a) {
  ordered_json j;
  j["mean"] = a.mean;
  j["ci95_halfwidth"] =
      a.has_halfwidth ? ordered_json(a.halfwidth) : ordered_json(nullptr);
  j["n"] = a.n;
  return j;
}

ordered_json train_config_json(const TrainConfig& c) {
  ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["batch_size"] = c.batch_size;
  j["huber_delta"] = c.huber_delta;
  j["weight_decay"] = c.weight_decay;
  j["betas"] = {c.beta1, c.beta2};
  j["adam_eps"] = c.adam_eps;
  j["validation_fraction"] = c.validation_fraction;
  j["seed"] = c.seed;
  j["variant"] = c.variant == Variant::kFull ? "full" : "fixed";
  j["hidden"] = c.hidden;
  return j;
}

ordered_json forest_params_json(const ForestParams& p) {
  ordered_json j;
  j["n_trees"] = p.n_trees;
  j["max_depth"] = p.max_depth;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["mtry"] = p.mtry;
  j["bootstrap"] = p.bootstrap;
  return j;
}

ordered_json synth_args_json(const SynthArgs& a) {
  ordered_json j;
  j["seed"] = a.seed;
  j["pixels"] = a.pixels;
  j["bands"] = a.bands;
  j["k"] = a.k;
  j["classes"] = a.classes;
  j["noise_sd"] = a.noise_sd;
  j["shared_shape"] = a.shared_shape;
  return j;
}

fs::path make_out_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("--out directory is required");
  fs::create_directories(dir);
  return dir;
}

std::vector<std::pair<int, int>> to_pairs(const std::vector<int>& pixels,
                                          int width) {
  std::vector<std::pair<int, int>> out;
  out.reserve(pixels.size());
  for (const int p : pixels) out.emplace_back(p / width, p % width);
  return out;
}

Matrix slice_rows(const Matrix& m, int begin, int count) {
  Matrix out(count, m.cols);
  std::memcpy(out.data.data(), m.row(begin),
              static_cast<std::size_t>(count) * m.cols * sizeof(double));
  return out;
}

std::uint64_t fraction_bits(double f) {
  std::uint64_t b = 0;
  std::memcpy(&b, &f, sizeof(b));
  return b;
}

// Stratified selection preserving original row order; each present class
// keeps max(1, round(count * fraction)) rows. At fraction 1.0 this is the
// identity, so sweep results reproduce plain evaluation exactly.
std::vector<int> stratified_subsample(const std::vector<int>& labels,
                                      double fraction, Rng& rng) {
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }
  std::vector<bool> selected(labels.size(), false);
  for (auto& [cls, rows] : by_class) {
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(fraction * static_cast<double>(rows.size()))));
    rng.shuffle(rows);
    for (std::size_t i = 0; i < take && i < rows.size(); ++i) {
      selected[rows[i]] = true;
    }
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (selected[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

struct ClsData {
  EncoderModel model;
  BandMeans means;
  SpectralCube cube;
  std::vector<int> train_px, test_px;   // labeled pixels per side
  std::vector<int> train_y, test_y;
  Matrix train_f, test_f;
};

ClsData load_classification_data(const EvalClsArgs& args) {
  ModelDir md = load_model_dir(args.model_dir);
  require_file(args.cube, "cube");
  require_file(args.labels, "labels CSV");
  require_file(args.split, "split CSV");

  ClsData d;
  d.model = std::move(md.model);
  d.means = std::move(md.means);
  d.cube = load_cube(args.cube);
  const LabelMap labels =
      load_labels_csv(args.labels, d.cube.height, d.cube.width);
  const PixelSplit split =
      load_pixel_split_csv(args.split, d.cube.height, d.cube.width);

  for (const int p : split.train) {
    if (labels.classes[p] != kUnlabeledClass) {
      d.train_px.push_back(p);
      d.train_y.push_back(labels.classes[p]);
    }
  }
  for (const int p : split.test) {
    if (labels.classes[p] != kUnlabeledClass) {
      d.test_px.push_back(p);
      d.test_y.push_back(labels.classes[p]);
    }
  }
  if (d.train_px.empty() || d.test_px.empty()) {
    throw UsageError("split leaves an empty labeled train or test set");
  }

  std::vector<int> all = d.train_px;
  all.insert(all.end(), d.test_px.begin(), d.test_px.end());
  const FeatureMatrix f =
      extract_latents(d.model, d.cube, d.means, to_pairs(all, d.cube.width));
  d.train_f = slice_rows(f.features, 0, static_cast<int>(d.train_px.size()));
  d.test_f = slice_rows(f.features, static_cast<int>(d.train_px.size()),
                        static_cast<int>(d.test_px.size()));
  return d;
}

ClassificationReport eval_one_forest(const ClsData& d, const Matrix& train_f,
                                     const std::vector<int>& train_y,
                                     const ForestParams& params,
                                     std::uint64_t seed) {
  std::vector<double> targets(train_y.begin(), train_y.end());
  const ForestModel forest =
      fit_forest(train_f, targets, ForestTask::kClassification, params, seed);
  const std::vector<double> pred = predict(forest, d.test_f);
  std::vector<int> pred_i(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred_i[i] = static_cast<int>(pred[i]);
  }
  return classification_report(pred_i, d.test_y);
}

ordered_json report_json(const ClassificationReport& r) {
  ordered_json j;
  j["oa"] = r.oa;
  j["aa"] = r.aa;
  j["n_classes"] = r.n_classes;
  ordered_json recalls = ordered_json::array();
  for (const double v : r.recalls) {
    recalls.push_back(std::isnan(v) ? ordered_json(nullptr) : ordered_json(v));
  }
  j["recalls"] = std::move(recalls);
  j["confusion"] = r.confusion;
  return j;
}

}  // namespace

void cmd_synth(const SynthArgs& args) {
  if (args.out_prefix.empty()) throw UsageError("--out prefix is required");
  SyntheticOptions opt;
  opt.classes = args.classes;
  opt.shared_shape = args.shared_shape;
  const SyntheticDataset d = generate_synthetic_ex(
      args.seed, args.pixels, args.bands, args.k, args.noise_sd, opt);

  const fs::path prefix = args.out_prefix;
  if (!prefix.parent_path().empty()) {
    fs::create_directories(prefix.parent_path());
  }
  write_cube(d.cube, fs::path(args.out_prefix + ".json"));
  write_truth_csv(d.truth, fs::path(args.out_prefix + "_truth.csv"));
  if (args.classes > 0) {
    write_labels_csv(d.labels, fs::path(args.out_prefix + "_labels.csv"));
  }
  std::cout << "synth: wrote " << d.cube.pixels() << " pixels x "
            << d.cube.bands << " bands to " << args.out_prefix << ".json\n";
}

void cmd_train(const TrainArgs& args) {
  const fs::path out = make_out_dir(args.out_dir);
  if (args.variant != "full" && args.variant != "fixed") {
    throw UsageError("--variant must be full or fixed");
  }

  SpectralCube cube;
  if (args.synthetic) {
    SyntheticOptions opt;
    opt.classes = args.synth.classes;
    opt.shared_shape = args.synth.shared_shape;
    const SyntheticDataset d =
        generate_synthetic_ex(args.synth.seed, args.synth.pixels,
                              args.synth.bands, args.k, args.synth.noise_sd,
                              opt);
    cube = d.cube;
    write_cube(cube, out / "synthetic.json");
    write_truth_csv(d.truth, out / "synthetic_truth.csv");
    if (opt.classes > 0) write_labels_csv(d.labels, out / "synthetic_labels.csv");
  } else {
    require_file(args.cube, "cube");
    cube = load_cube(args.cube);
  }

  const BandMeans means = compute_band_means(cube);

  ordered_json snapshot;
  snapshot["command"] = "train";
  snapshot["cube"] = args.synthetic ? "synthetic" : args.cube;
  if (args.synthetic) snapshot["synthetic"] = synth_args_json(args.synth);
  snapshot["k"] = args.k;
  snapshot["variant"] = args.variant;
  snapshot["resume"] = args.resume;
  snapshot["train"] = train_config_json(args.train);
  write_json_file(out / "config.json", snapshot);

  TrainResult res;
  if (!args.resume.empty()) {
    require_file(args.resume, "resume manifest");
    const EncoderModel start = load_checkpoint(args.resume);
    res = resume_training(start, cube, means, args.train);
  } else if (args.variant == "fixed") {
    res = train_fixed_variant(cube, means, args.train, args.k);
  } else {
    res = train_autoencoder(cube, means, args.train, args.k);
  }

  save_checkpoint(res.model, out / "checkpoint" / "manifest.json");
  write_band_means_csv(means, out / "band_means.csv");
  write_train_log_csv(res.log, out / "log.csv");

  ordered_json manifest;
  manifest["command"] = "train";
  manifest["variant"] =
      res.model.cfg.variant == Variant::kFull ? "full" : "fixed";
  manifest["k"] = res.model.cfg.k;
  manifest["bands"] = res.model.cfg.bands;
  manifest["pixels"] = cube.pixels();
  manifest["epochs_trained"] = res.log.size();
  manifest["best_epoch"] = res.best_epoch;
  manifest["best_val_loss"] = res.best_val_loss;
  manifest["checkpoint"] = "checkpoint/manifest.json";
  if (res.model.cfg.variant == Variant::kFixed) {
    std::vector<double> mu, sigma, alpha;
    bank_activate(res.model, &mu, &sigma, &alpha);
    manifest["bank"] = {{"mu", mu}, {"sigma", sigma}, {"alpha", alpha}};
  }
  write_json_file(out / "manifest.json", manifest);

  std::cout << "train: best val loss " << res.best_val_loss << " at epoch "
            << res.best_epoch << " (" << res.log.size() << " epochs run)\n";
}

void cmd_eval_classification(const EvalClsArgs& args) {
  if (args.seeds.empty()) throw UsageError("at least one seed is required");
  const fs::path out = make_out_dir(args.out_dir);
  const ClsData d = load_classification_data(args);

  ordered_json snapshot;
  snapshot["command"] = "eval-cls";
  snapshot["model_dir"] = args.model_dir;
  snapshot["cube"] = args.cube;
  snapshot["labels"] = args.labels;
  snapshot["split"] = args.split;
  snapshot["seeds"] = args.seeds;
  snapshot["forest"] = forest_params_json(args.forest);
  write_json_file(out / "config.json", snapshot);

  std::vector<double> oas, aas;
  ordered_json runs = ordered_json::array();
  for (const std::uint64_t seed : args.seeds) {
    const ClassificationReport r =
        eval_one_forest(d, d.train_f, d.train_y, args.forest, seed);
    oas.push_back(r.oa);
    aas.push_back(r.aa);
    ordered_json run;
    run["seed"] = seed;
    run["report"] = report_json(r);
    runs.push_back(std::move(run));
    std::cout << "seed " << seed << ": OA " << r.oa << " AA " << r.aa << "\n";
  }

  ordered_json manifest;
  manifest["command"] = "eval-cls";
  manifest["runs"] = std::move(runs);
  manifest["aggregate"] = {{"oa", agg_json(aggregate(oas))},
                           {"aa", agg_json(aggregate(aas))}};
  write_json_file(out / "manifest.json", manifest);

  const Agg oa = aggregate(oas), aa = aggregate(aas);
  std::cout << "OA " << oa.mean;
  if (oa.has_halfwidth) std::cout << " +- " << oa.halfwidth;
  std::cout << ", AA " << aa.mean;
  if (aa.has_halfwidth) std::cout << " +- " << aa.halfwidth;
  std::cout << " over " << oa.n << " run(s)\n";
}

void cmd_small_data_sweep(const SweepArgs& args) {
  if (args.eval.seeds.empty()) throw UsageError("at least one seed is required");
  if (args.fractions.empty()) throw UsageError("at least one fraction is required");
  for (const double f : args.fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw UsageError("fractions must lie in (0, 1]");
    }
  }
  const fs::path out = make_out_dir(args.eval.out_dir);
  const ClsData d = load_classification_data(args.eval);

  ordered_json snapshot;
  snapshot["command"] = "sweep-small-data";
  snapshot["model_dir"] = args.eval.model_dir;
  snapshot["cube"] = args.eval.cube;
  snapshot["labels"] = args.eval.labels;
  snapshot["split"] = args.eval.split;
  snapshot["seeds"] = args.eval.seeds;
  snapshot["fractions"] = args.fractions;
  snapshot["forest"] = forest_params_json(args.eval.forest);
  write_json_file(out / "config.json", snapshot);

  ordered_json rows = ordered_json::array();
  ordered_json aggregates = ordered_json::array();
  for (const double fraction : args.fractions) {
    std::vector<double> oas, aas;
    for (const std::uint64_t seed : args.eval.seeds) {
      // the subsample draw is decorrelated across fractions; the forest
      // itself uses the plain seed so fraction 1.0 reproduces eval-cls
      Rng pick(mix_seed(seed, fraction_bits(fraction)));
      const std::vector<int> rows_sel =
          stratified_subsample(d.train_y, fraction, pick);
      Matrix sub_f(static_cast<int>(rows_sel.size()), d.train_f.cols);
      std::vector<int> sub_y(rows_sel.size());
      for (std::size_t i = 0; i < rows_sel.size(); ++i) {
        std::memcpy(sub_f.row(static_cast<int>(i)), d.train_f.row(rows_sel[i]),
                    static_cast<std::size_t>(d.train_f.cols) * sizeof(double));
        sub_y[i] = d.train_y[rows_sel[i]];
      }
      const ClassificationReport r =
          eval_one_forest(d, sub_f, sub_y, args.eval.forest, seed);
      oas.push_back(r.oa);
      aas.push_back(r.aa);
      ordered_json row;
      row["fraction"] = fraction;
      row["seed"] = seed;
      row["train_rows"] = rows_sel.size();
      row["oa"] = r.oa;
      row["aa"] = r.aa;
      rows.push_back(std::move(row));
    }
    ordered_json agg;
    agg["fraction"] = fraction;
    agg["oa"] = agg_json(aggregate(oas));
    agg["aa"] = agg_json(aggregate(aas));
    aggregates.push_back(std::move(agg));
    std::cout << "fraction " << fraction << ": mean AA "
              << aggregate(aas).mean << "\n";
  }

  ordered_json manifest;
  manifest["command"] = "sweep-small-data";
  manifest["runs"] = std::move(rows);
  manifest["aggregate"] = std::move(aggregates);
  write_json_file(out / "manifest.json", manifest);
}

void cmd_eval_regression(const EvalRegArgs& args) {
  if (args.seeds.empty()) throw UsageError("at least one seed is required");
  const fs::path out = make_out_dir(args.out_dir);

  ModelDir md = load_model_dir(args.model_dir);
  require_file(args.cube, "cube");
  require_file(args.patches, "patches CSV");
  require_file(args.targets, "targets CSV");
  require_file(args.split, "patch split CSV");
  const SpectralCube cube = load_cube(args.cube);
  const PatchSet patches =
      load_patches_csv(args.patches, cube.height, cube.width);
  const PatchTargets targets = load_patch_targets_csv(args.targets);
  const PatchSplit split = load_patch_split_csv(args.split);

  for (const int id : targets.patch_ids) {
    if (patches.index_of(id) < 0) {
      throw UsageError("targets reference unknown patch id " +
                       std::to_string(id));
    }
  }
  std::vector<int> wanted = split.train;
  wanted.insert(wanted.end(), split.test.begin(), split.test.end());
  if (split.train.empty() || split.test.empty()) {
    throw UsageError("patch split needs both train and test patches");
  }

  PatchSet sub;
  sub.width = patches.width;
  std::set<int> wanted_sorted(wanted.begin(), wanted.end());
  for (const int id : wanted_sorted) {
    const int pi = patches.index_of(id);
    if (pi < 0) throw UsageError("split references unknown patch id " +
                                 std::to_string(id));
    if (targets.index_of(id) < 0) {
      throw UsageError("split patch " + std::to_string(id) + " has no targets");
    }
    sub.patch_ids.push_back(id);
    sub.members.push_back(patches.members[pi]);
  }

  std::vector<std::pair<int, int>> pixel_list;
  for (const auto& members : sub.members) {
    for (const int p : members) {
      pixel_list.emplace_back(p / patches.width, p % patches.width);
    }
  }
  FeatureMatrix pixel_features =
      extract_latents(md.model, cube, md.means, pixel_list);
  const FeatureMatrix patch_features =
      average_per_patch(pixel_features, sub);

  std::map<int, int> row_of;
  for (std::size_t i = 0; i < patch_features.patch_ids.size(); ++i) {
    row_of[patch_features.patch_ids[i]] = static_cast<int>(i);
  }

  const int n_vars = static_cast<int>(targets.names.size());
  const int d = patch_features.features.cols;
  auto gather = [&](const std::vector<int>& ids, Matrix* f,
                    std::vector<std::vector<double>>* y) {
    *f = Matrix(static_cast<int>(ids.size()), d);
    y->assign(n_vars, std::vector<double>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::memcpy(f->row(static_cast<int>(i)),
                  patch_features.features.row(row_of.at(ids[i])),
                  static_cast<std::size_t>(d) * sizeof(double));
      const int ti = targets.index_of(ids[i]);
      for (int v = 0; v < n_vars; ++v) {
        (*y)[v][i] = targets.values[ti][v];
      }
    }
  };
  Matrix train_f, test_f;
  std::vector<std::vector<double>> train_y, test_y;
  gather(split.train, &train_f, &train_y);
  gather(split.test, &test_f, &test_y);

  std::vector<double> baselines = args.baselines;
  bool default_baselines = false;
  if (baselines.empty()) {
    default_baselines = true;
    baselines.resize(n_vars);
    for (int v = 0; v < n_vars; ++v) {
      const double mean_v =
          std::accumulate(train_y[v].begin(), train_y[v].end(), 0.0) /
          static_cast<double>(train_y[v].size());
      baselines[v] =
          mse(std::vector<double>(test_y[v].size(), mean_v), test_y[v]);
      if (!(baselines[v] > 0.0)) {
        throw UsageError("default baseline MSE is zero for variable " +
                         targets.names[v] + "; supply explicit baselines");
      }
    }
  } else if (static_cast<int>(baselines.size()) != n_vars) {
    throw UsageError("baseline count does not match target variables");
  }

  ordered_json snapshot;
  snapshot["command"] = "eval-reg";
  snapshot["model_dir"] = args.model_dir;
  snapshot["cube"] = args.cube;
  snapshot["patches"] = args.patches;
  snapshot["targets"] = args.targets;
  snapshot["split"] = args.split;
  snapshot["seeds"] = args.seeds;
  snapshot["baselines"] = baselines;
  snapshot["default_baselines"] = default_baselines;
  snapshot["forest"] = forest_params_json(args.forest);
  write_json_file(out / "config.json", snapshot);

  std::vector<double> scores;
  ordered_json runs = ordered_json::array();
  for (const std::uint64_t seed : args.seeds) {
    RegressionReport rep;
    rep.variable_names = targets.names;
    rep.mse_baselines = baselines;
    rep.default_baselines = default_baselines;
    for (int v = 0; v < n_vars; ++v) {
      const ForestModel forest =
          fit_forest(train_f, train_y[v], ForestTask::kRegression, args.forest,
                     mix_seed(seed, 1000 + static_cast<std::uint64_t>(v)));
      rep.mse_values.push_back(mse(predict(forest, test_f), test_y[v]));
    }
    rep.score = hyperview_score(rep.mse_values, rep.mse_baselines);
    scores.push_back(rep.score);
    ordered_json run;
    run["seed"] = seed;
    run["mse"] = rep.mse_values;
    run["score"] = rep.score;
    runs.push_back(std::move(run));
    std::cout << "seed " << seed << ": score " << rep.score << "\n";
  }

  ordered_json manifest;
  manifest["command"] = "eval-reg";
  manifest["variables"] = targets.names;
  manifest["baselines"] = baselines;
  manifest["default_baselines"] = default_baselines;
  manifest["runs"] = std::move(runs);
  manifest["aggregate"] = {{"score", agg_json(aggregate(scores))}};
  write_json_file(out / "manifest.json", manifest);

  const Agg sc = aggregate(scores);
  std::cout << "score " << sc.mean;
  if (sc.has_halfwidth) std::cout << " +- " << sc.halfwidth;
  std::cout << " over " << sc.n << " run(s)\n";
}

void cmd_dump_components(const DumpArgs& args) {
  const fs::path out = make_out_dir(args.out_dir);
  ModelDir md = load_model_dir(args.model_dir);
  require_file(args.cube, "cube");
  const SpectralCube cube = load_cube(args.cube);

  const FeatureMatrix f =
      extract_latents(md.model, cube, md.means, args.pixels);

  const int k = md.model.cfg.k;
  std::vector<std::tuple<int, int, ComponentParams>> rows;
  for (std::size_t i = 0; i < args.pixels.size(); ++i) {
    rows.emplace_back(args.pixels[i].first, args.pixels[i].second,
                      ComponentParams::from_flat(
                          f.features.row(static_cast<int>(i)), k));
  }

  std::ofstream comp(out / "components.csv");
  if (!comp) throw std::runtime_error("cannot write components.csv");
  write_components_csv(comp, rows, cube.band_coords);

  std::ofstream rec(out / "reconstruction.csv");
  if (!rec) throw std::runtime_error("cannot write reconstruction.csv");
  rec << "pixel_row,pixel_col,band_coord,value\n";
  for (const auto& [r, c, params] : rows) {
    const std::vector<double> spectrum = render(params, cube.band_coords);
    for (std::size_t b = 0; b < spectrum.size(); ++b) {
      rec << r << ',' << c << ',' << csv::format_double(cube.band_coords[b])
          << ',' << csv::format_double(spectrum[b]) << '\n';
    }
  }

  write_band_means_csv(md.means, out / "band_means.csv");
  std::cout << "dump-components: " << rows.size() << " pixel(s) x " << k
            << " component(s)\n";
}

void cmd_export_latents(const ExportLatentsArgs& args) {
  if (args.out_csv.empty()) throw UsageError("--out CSV path is required");
  ModelDir md = load_model_dir(args.model_dir);
  require_file(args.cube, "cube");
  const SpectralCube cube = load_cube(args.cube);

  std::vector<std::pair<int, int>> pixels;
  PatchSet patches;
  if (!args.patches.empty()) {
    require_file(args.patches, "patches CSV");
    patches = load_patches_csv(args.patches, cube.height, cube.width);
    for (const auto& members : patches.members) {
      for (const int p : members) {
        pixels.emplace_back(p / patches.width, p % patches.width);
      }
    }
  } else {
    pixels.reserve(cube.pixels());
    for (int r = 0; r < cube.height; ++r) {
      for (int c = 0; c < cube.width; ++c) pixels.emplace_back(r, c);
    }
  }

  FeatureMatrix f = extract_latents(md.model, cube, md.means, pixels);
  if (!args.patches.empty()) {
    f = average_per_patch(f, patches);
  }
  const fs::path out_path(args.out_csv);
  if (!out_path.parent_path().empty()) {
    fs::create_directories(out_path.parent_path());
  }
  write_latents_csv(f, out_path);
  std::cout << "export-latents: " << f.features.rows << " rows x "
            << f.features.cols << " features\n";
}

}  // namespace pism::cmd
