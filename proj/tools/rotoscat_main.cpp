// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

// Command-line front end: transform, select, train, eval, ablate, validate, info.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rotoscat/config.hpp"
#include "rotoscat/feature_file.hpp"
#include "rotoscat/pipeline.hpp"
#include "rotoscat/scattering.hpp"
#include "rotoscat/validation.hpp"

namespace {

using namespace rotoscat;

struct Options {
  PipelineConfig config;
  std::string config_path;
  std::string normalization;
  bool quiet = false;
};

void add_config_flags(CLI::App* app, Options& o) {
  auto& c = o.config;
  auto& d = c.dataset;
  app->add_option("--config", o.config_path, "JSON config; its keys override the flags")->check(CLI::ExistingFile);
  app->add_option("--dataset", d.kind, "cifar10 | cifar100 | imagedir | synthetic");
  app->add_option("--data", d.path, "Dataset directory");
  app->add_option("--subset-train", d.subset_train_per_class, "CIFAR training images per class (0 = all)");
  app->add_option("--subset-test", d.subset_test_per_class, "CIFAR test images per class (0 = all)");
  app->add_option("--verify-counts", d.verify_counts, "Require the published CIFAR counts (true/false)");
  app->add_option("--train-per-class", d.train_per_class, "Training images per class for pooled corpora");
  app->add_option("--exclude", d.exclude, "Class directories to skip");
  app->add_option("--synthetic-classes", d.synthetic_classes);
  app->add_option("--synthetic-per-class", d.synthetic_per_class);
  app->add_option("--log2-side", c.log2_side, "d: images are 2^d squares");
  app->add_option("--max-scale", c.max_scale, "J (0 = d - 2)");
  app->add_option("--orientations", c.orientations, "L");
  app->add_option("--angular-scales", c.angular_scales, "K (0 = log2(L/2))");
  app->add_option("--order", c.order, "Scattering order, 1 or 2");
  app->add_option("--roto-translation", c.roto_translation, "Angular wavelets at order 2 (true/false)");
  app->add_option("--yuv", c.yuv, "Convert RGB to YUV before scattering (true/false)");
  app->add_option("--sigma0", c.morlet.sigma0);
  app->add_option("--xi0", c.morlet.xi0);
  app->add_option("--slant", c.morlet.slant);
  app->add_option("--normalization", o.normalization, "tight | peak");
  app->add_option("--log-epsilon", c.log_epsilon_relative, "Log floor relative to the median coefficient");
  app->add_option("--ols", c.ols, "Use OLS selection (true/false)");
  app->add_option("--feature-count", c.feature_count, "M");
  app->add_option("--per-class", c.per_class, "OLS steps per class (overrides M)");
  app->add_option("--feature-ratio", c.feature_ratio, "M as a fraction of the dimension when M = 0");
  app->add_option("--svm-c", c.svm_c);
  app->add_option("--svm-tolerance", c.svm_tolerance);
  app->add_option("--svm-max-iterations", c.svm_max_iterations);
  app->add_option("--bandwidth-squared", c.bandwidth_squared_norm, "Mean squared norm for sigma^2 (true/false)");
  app->add_option("--seed", c.seed);
  app->add_option("--splits", c.splits, "Random splits for pooled corpora");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  app->add_option("--cache-dir", c.cache_dir, "Feature cache directory")->envname("ROTOSCAT_CACHE_DIR");
  app->add_option("--filter-cache", c.filter_cache, "Filter bank cache file");
  app->add_flag("--quiet", o.quiet, "No progress lines on stderr");
}

PipelineConfig resolve(const Options& o) {
  PipelineConfig c = o.config;
  if (!o.normalization.empty()) c.morlet.normalization = frame_normalization_from_string(o.normalization);
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  c.validate();
  return c;
}

Logger logger(const Options& o) {
  if (o.quiet) return {};
  return [](const std::string& line) { std::cerr << "[rotoscat] " << line << '\n'; };
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

FeatureSet features_for(const std::string& path, const PipelineConfig& c, const Logger& log) {
  if (!path.empty()) return load_features(path);
  return compute_features(c, log);
}

int cmd_transform(const Options& o, const std::string& out_arg, const std::string& manifest_arg,
                  const std::string& csv) {
  const auto c = resolve(o);
  const auto log = logger(o);
  std::filesystem::path out = out_arg;
  if (out.empty()) out = c.cache_dir.empty() ? std::filesystem::path("features.rsft") : feature_cache_path(c);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());

  const auto corpus = load_corpus(c);
  const auto f = transform_corpus(corpus, c, log);
  save_features(f, out);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < corpus.data.size(); ++i) {
    std::string split = "pool";
    if (!corpus.partition.empty()) split = corpus.partition[i] == Partition::kTrain ? "train" : "test";
    entries.push_back({corpus.data.sources[i], corpus.data.class_names[corpus.data.labels[i]], split});
  }
  const std::string manifest = manifest_arg.empty() ? out.string() + ".manifest.csv" : manifest_arg;
  write_manifest(manifest, entries);
  if (!csv.empty()) export_features_csv(f, csv);
  std::cout << "features=" << out.string() << '\n'
            << "manifest=" << manifest << '\n'
            << "images=" << f.rows() << '\n'
            << "dimension=" << f.values.cols() << '\n'
            << "config_hash=" << std::hex << f.header.config_hash << std::dec << '\n';
  return 0;
}

int cmd_select(const Options& o, const std::string& features, const std::string& out, int split) {
  const auto c = resolve(o);
  const auto f = features_for(features, c, logger(o));
  const auto rows = split_rows(f, c, split);
  const auto p = fit_reduction(f, rows.train, c);
  save_pipeline(p, out);
  std::cout << "selection=" << out << '\n'
            << "input_dim=" << p.input_dim << '\n'
            << "reduced_dim=" << (p.ols ? p.basis.size() : p.input_dim) << '\n'
            << "epsilon=" << p.epsilon << '\n';
  if (p.ols) std::cout << "ols_truncated_classes=" << p.basis.truncated_classes.size() << '\n';
  return 0;
}

int cmd_train(const Options& o, const std::string& features, const std::string& selection, const std::string& out,
              int split) {
  const auto c = resolve(o);
  const auto f = features_for(features, c, logger(o));
  const auto rows = split_rows(f, c, split);
  TrainedPipeline p = selection.empty() ? fit_reduction(f, rows.train, c) : load_pipeline(selection);
  if (p.config_hash != f.header.config_hash) throw PipelineError("selection was fitted on other features");
  fit_classifier(p, f, rows.train, c);
  save_pipeline(p, out);
  const double acc = accuracy(classify(p, gather_rows(f.values, rows.train)), gather_labels(f.labels, rows.train));
  std::cout << "model=" << out << '\n' << "train_accuracy=" << acc << '\n' << "sigma2=" << p.model->sigma2 << '\n';
  return 0;
}

int cmd_eval(const Options& o, const std::string& features, const std::string& model, const std::string& report,
             const std::string& csv, int split) {
  const auto c = resolve(o);
  const auto log = logger(o);
  const auto f = features_for(features, c, log);
  if (!model.empty()) {
    const auto p = load_pipeline(model);
    if (p.config_hash != f.header.config_hash) throw PipelineError("model was trained on other features");
    const auto rows = split_rows(f, c, split);
    const double acc = accuracy(classify(p, gather_rows(f.values, rows.test)), gather_labels(f.labels, rows.test));
    std::ostringstream s;
    s << "n_test=" << rows.test.size() << '\n' << "test_accuracy=" << acc << '\n';
    std::cout << s.str();
    write_text(report, s.str());
    return 0;
  }
  const auto r = train_eval(f, c, log);
  const auto text = format_report(r);
  std::cout << text;
  write_text(report, text);
  write_text(csv, format_splits_csv(r));
  return 0;
}

int cmd_ablate(const Options& o, bool dry_run, const std::string& report, const std::string& csv) {
  const auto c = resolve(o);
  if (dry_run) {
    const auto plan = plan_ablation(c);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& e = plan[i];
      std::cout << "plan" << i << ".name=" << e.name << '\n'
                << "plan" << i << ".roto_translation=" << e.config.roto_translation << '\n'
                << "plan" << i << ".order=" << e.config.order << '\n'
                << "plan" << i << ".ols=" << e.config.ols << '\n'
                << "plan" << i << ".transform_hash=" << std::hex << transform_hash(e.config) << std::dec << '\n';
    }
    return 0;
  }
  const auto entries = run_ablation(c, logger(o));
  std::ostringstream s;
  for (const auto& e : entries) s << format_report(*e.report, e.name + ".");
  std::cout << format_ablation_csv(entries);
  write_text(report, s.str());
  write_text(csv, format_ablation_csv(entries));
  return 0;
}

int cmd_validate(const Options& o, const ValidationOptions& v, const std::string& report) {
  const auto c = resolve(o);
  const auto r = run_validation(c, v);
  const auto text = r.format();
  std::cout << text;
  write_text(report, text);
  return r.passed() ? 0 : 1;
}

int cmd_info(const Options& o, const std::string& features, const std::string& save) {
  const auto c = resolve(o);
  if (!save.empty()) save_config(c, save);
  // Geometry of a color input; every supported loader yields three channels.
  const auto paths = enumerate_paths(c.scattering(), 3);
  const int grid = (1 << c.log2_side) >> c.resolved_max_scale();
  std::size_t per_order[3] = {0, 0, 0};
  for (const auto& p : paths) per_order[p.order] += static_cast<std::size_t>(grid) * grid;
  std::cout << "side=" << (1 << c.log2_side) << '\n'
            << "max_scale=" << c.resolved_max_scale() << '\n'
            << "orientations=" << c.orientations << '\n'
            << "angular_scales=" << c.resolved_angular_scales() << '\n'
            << "grid=" << grid << '\n'
            << "coefficients_order0=" << per_order[0] << '\n'
            << "coefficients_order1=" << per_order[1] << '\n'
            << "coefficients_order2=" << per_order[2] << '\n'
            << "dimension=" << per_order[0] + per_order[1] + per_order[2] << '\n'
            << "transform_hash=" << std::hex << transform_hash(c) << std::dec << '\n';
  for (int j = 1; j <= 6; ++j) std::cout << "frames_depth" << j << '=' << count_frames(j, c.orientations) << '\n';
  const auto cc = completeness_check(c.resolved_max_scale(), c.orientations);
  std::cout << "completeness_value=" << cc.value << '\n';
  if (!features.empty()) {
    const auto f = load_feature_header(features);
    std::cout << "file.images=" << f.rows() << '\n'
              << "file.classes=" << f.n_classes() << '\n'
              << "file.channels=" << f.header.channels << '\n'
              << "file.dimension=" << f.header.columns() << '\n'
              << "file.yuv=" << f.header.yuv << '\n'
              << "file.config_hash=" << std::hex << f.header.config_hash << std::dec << '\n';
  }
  std::cout << "config=" << to_json(c).size() << " bytes\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Roto-translation scattering features with OLS selection and a Gaussian SVM"};
  app.require_subcommand(1);
  Options o;

  std::string out, manifest, csv, features, selection, model, report, save;
  int split = 0;
  bool dry_run = false;
  ValidationOptions vopts;

  auto* transform = app.add_subcommand("transform", "Scatter a dataset into a feature file");
  add_config_flags(transform, o);
  transform->add_option("--out", out, "Feature file (default: cache path or features.rsft)");
  transform->add_option("--manifest", manifest, "Manifest CSV (default: <out>.manifest.csv)");
  transform->add_option("--csv", csv, "Also export the features as CSV");

  auto* select = app.add_subcommand("select", "Fit the log floor and OLS selection on a training split");
  add_config_flags(select, o);
  select->add_option("--features", features, "Feature file (default: compute or reuse the cache)");
  select->add_option("--out", out, "Output pipeline file")->required();
  select->add_option("--split", split);

  auto* trn = app.add_subcommand("train", "Train the SVM on a training split");
  add_config_flags(trn, o);
  trn->add_option("--features", features);
  trn->add_option("--selection", selection, "Pipeline file from `select`");
  trn->add_option("--out", out, "Output pipeline file")->required();
  trn->add_option("--split", split);

  auto* eval = app.add_subcommand("eval", "Evaluate a trained pipeline, or run train+eval over all splits");
  add_config_flags(eval, o);
  eval->add_option("--features", features);
  eval->add_option("--model", model, "Pipeline file from `train`");
  eval->add_option("--report", report, "Write the key=value report here");
  eval->add_option("--csv", csv, "Per-split CSV");
  eval->add_option("--split", split);

  auto* ablate = app.add_subcommand("ablate", "Five-configuration comparison");
  add_config_flags(ablate, o);
  ablate->add_flag("--dry-run", dry_run, "Print the planned configurations only");
  ablate->add_option("--report", report);
  ablate->add_option("--csv", csv);

  auto* validate = app.add_subcommand("validate", "Filter-bank and invariant checks; exit 1 on failure");
  add_config_flags(validate, o);
  validate->add_option("--report", report);
  validate->add_option("--validation-seed", vopts.seed);
  validate->add_flag("--inject-fault", vopts.inject_fault)->group("");
  validate->add_option("--fault-factor", vopts.fault_factor)->group("");

  auto* info = app.add_subcommand("info", "Print the resolved geometry and an optional feature file header");
  add_config_flags(info, o);
  info->add_option("--features", features);
  info->add_option("--save-config", save, "Write the resolved config as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*transform) return cmd_transform(o, out, manifest, csv);
    if (*select) return cmd_select(o, features, out, split);
    if (*trn) return cmd_train(o, features, selection, out, split);
    if (*eval) return cmd_eval(o, features, model, report, csv, split);
    if (*ablate) return cmd_ablate(o, dry_run, report, csv);
    if (*validate) return cmd_validate(o, vopts, report);
    if (*info) return cmd_info(o, features, save);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
