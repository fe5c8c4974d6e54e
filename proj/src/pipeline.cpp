// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "parallel.hpp"
#include "rotoscat/binary_io.hpp"
#include "rotoscat/scattering.hpp"

namespace rotoscat {
namespace {

constexpr std::array<char, 4> kPipelineMagic{'R', 'S', 'P', 'L'};

void say(const Logger& log, const std::string& line) {
  if (log) log(line);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

LabeledDataset rescaled(LabeledDataset ds, int log2_side) {
  for (auto& img : ds.images) img = rescale_square(img, log2_side);
  return ds;
}

FeatureHeader expected_header(const PipelineConfig& config, int channels, bool yuv) {
  FeatureHeader h;
  h.log2_side = config.log2_side;
  h.scattering = config.scattering();
  h.channels = channels;
  h.grid = (1 << config.log2_side) >> h.scattering.max_scale;
  h.yuv = yuv;
  h.config_hash = transform_hash(config);
  h.paths = enumerate_paths(h.scattering, channels);
  return h;
}

SvmOptions svm_options(const PipelineConfig& config) {
  SvmOptions o;
  o.C = config.svm_c;
  o.tolerance = config.svm_tolerance;
  o.max_iterations = config.svm_max_iterations;
  o.threads = config.threads;
  return o;
}

}  // namespace

Corpus load_corpus(const PipelineConfig& config) {
  config.validate();
  const auto& spec = config.dataset;
  Corpus corpus;
  if (spec.kind == "cifar10" || spec.kind == "cifar100") {
    if (spec.path.empty()) throw PipelineError("dataset.path is required for " + spec.kind);
    const auto variant = spec.kind == "cifar10" ? CifarVariant::k10 : CifarVariant::k100;
    auto train = load_cifar(spec.path, variant, CifarSplit::kTrain, spec.verify_counts);
    auto test = load_cifar(spec.path, variant, CifarSplit::kTest, spec.verify_counts);
    if (spec.subset_train_per_class > 0) train = subset_per_class(train, spec.subset_train_per_class, config.seed);
    if (spec.subset_test_per_class > 0) test = subset_per_class(test, spec.subset_test_per_class, config.seed + 1);
    corpus.data = std::move(train);
    corpus.partition.assign(corpus.data.size(), Partition::kTrain);
    for (std::size_t i = 0; i < test.size(); ++i) {
      corpus.data.images.push_back(std::move(test.images[i]));
      corpus.data.labels.push_back(test.labels[i]);
      corpus.data.sources.push_back(test.sources[i]);
      corpus.partition.push_back(Partition::kTest);
    }
    corpus.data = rescaled(std::move(corpus.data), config.log2_side);
  } else if (spec.kind == "imagedir") {
    if (spec.path.empty()) throw PipelineError("dataset.path is required for imagedir");
    ImageDirOptions opts;
    opts.exclude = spec.exclude;
    opts.log2_side = config.log2_side;
    auto result = load_image_dir(spec.path, opts);
    corpus.data = std::move(result.dataset);
  } else {
    corpus.data = synthetic_textures(spec.synthetic_classes, spec.synthetic_per_class, config.log2_side, config.seed);
  }
  corpus.data.validate();
  if (corpus.data.images.front().log2_side() != config.log2_side) {
    throw PipelineError("dataset images are not 2^log2_side squares");
  }
  return corpus;
}

FilterBanks build_banks(const PipelineConfig& config) {
  const int J = config.resolved_max_scale();
  const int K = config.resolved_angular_scales();
  if (!config.filter_cache.empty() && std::filesystem::exists(config.filter_cache)) {
    if (auto banks = load_filter_cache(config.filter_cache, config.log2_side, J, config.orientations, K, config.morlet)) {
      return std::move(*banks);
    }
  }
  FilterBanks banks{SpatialFilterBank::build(config.log2_side, J, config.orientations, config.morlet),
                    AngularFilterBank::build(config.orientations, K, config.morlet)};
  if (!config.filter_cache.empty()) save_filter_cache(config.filter_cache, banks.spatial, banks.angular);
  return banks;
}

FeatureSet transform_corpus(const Corpus& corpus, const PipelineConfig& config, const Logger& log) {
  config.validate();
  const auto& ds = corpus.data;
  if (ds.size() == 0) throw PipelineError("empty dataset");
  const int channels = ds.images.front().channels();
  const bool yuv = config.yuv && channels == 3;
  const auto banks = build_banks(config);
  const auto scattering = config.scattering();

  FeatureSet out;
  out.header = expected_header(config, channels, yuv);
  out.labels = ds.labels;
  out.class_names = ds.class_names;
  out.sources = ds.sources;
  out.partition = corpus.partition;
  out.values.resize(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(out.header.columns()));

  say(log, "transform: " + std::to_string(ds.size()) + " images, " + std::to_string(out.header.columns()) +
               " coefficients each");
  detail::parallel_for(ds.size(), config.threads, [&](std::size_t i) {
    const Image input = yuv ? rgb_to_yuv(ds.images[i]) : ds.images[i];
    const auto s = scatter(input, banks.spatial, banks.angular, scattering);
    const auto flat = s.flat();
    if (flat.size() != out.header.columns()) throw PipelineError("scattering output does not match its path table");
    for (std::size_t c = 0; c < flat.size(); ++c) out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = flat[c];
  });
  return out;
}

std::filesystem::path feature_cache_path(const PipelineConfig& config) {
  return std::filesystem::path(config.cache_dir) / ("features-" + hex64(transform_hash(config)) + ".rsft");
}

FeatureSet compute_features(const PipelineConfig& config, const Logger& log) {
  config.validate();
  std::filesystem::path cached;
  if (!config.cache_dir.empty()) {
    cached = feature_cache_path(config);
    if (std::filesystem::exists(cached)) {
      try {
        auto f = load_features(cached);
        if (f.header == expected_header(config, f.header.channels, f.header.yuv)) {
          say(log, "transform: reusing " + cached.string());
          return f;
        }
      } catch (const std::exception& e) {
        say(log, std::string("transform: ignoring unreadable cache entry: ") + e.what());
      }
    }
  }
  auto f = transform_corpus(load_corpus(config), config, log);
  if (!cached.empty()) {
    std::filesystem::create_directories(config.cache_dir);
    save_features(f, cached);
    say(log, "transform: wrote " + cached.string());
  }
  return f;
}

std::vector<char> log_mask(const FeatureHeader& header) {
  std::vector<char> mask(header.columns(), 1);
  if (!header.yuv) return mask;
  const std::size_t cells = static_cast<std::size_t>(header.grid) * header.grid;
  for (std::size_t p = 0; p < header.paths.size(); ++p) {
    if (header.paths[p].order == 0 && header.paths[p].channel > 0) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(p * cells), cells, 0);
    }
  }
  return mask;
}

SplitRows split_rows(const FeatureSet& features, const PipelineConfig& config, int split) {
  SplitRows rows;
  if (!features.partition.empty()) {
    for (std::size_t i = 0; i < features.partition.size(); ++i) {
      (features.partition[i] == Partition::kTrain ? rows.train : rows.test).push_back(static_cast<Eigen::Index>(i));
    }
  } else {
    const auto mask = split_mask(features.labels, features.n_classes(), config.dataset.train_per_class,
                                 config.seed + static_cast<std::uint64_t>(split));
    for (std::size_t i = 0; i < mask.size(); ++i) (mask[i] ? rows.train : rows.test).push_back(static_cast<Eigen::Index>(i));
  }
  if (rows.train.empty() || rows.test.empty()) throw PipelineError("split left no training or no test rows");
  return rows;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& values, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<Eigen::Index>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

Eigen::MatrixXd TrainedPipeline::reduce(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != input_dim) throw PipelineError("dimension-mismatch: expected " + std::to_string(input_dim) + " columns");
  Eigen::MatrixXd x = raw;
  log_transform_inplace(x, epsilon, mask);
  if (ols) return project(basis, x);
  standardizer.apply(x);
  return x;
}

TrainedPipeline fit_reduction(const FeatureSet& features, const std::vector<Eigen::Index>& rows,
                              const PipelineConfig& config) {
  TrainedPipeline p;
  p.config_hash = features.header.config_hash;
  p.input_dim = static_cast<int>(features.values.cols());
  p.mask = log_mask(features.header);
  p.ols = config.ols;
  Eigen::MatrixXd x = gather_rows(features.values, rows);
  p.epsilon = relative_log_epsilon(x, config.log_epsilon_relative);
  log_transform_inplace(x, p.epsilon, p.mask);
  if (p.ols) {
    OlsOptions opts;
    const auto cap = std::min<Eigen::Index>(x.rows(), x.cols());
    opts.per_class = static_cast<int>(std::min<Eigen::Index>(config.resolved_per_class(x.cols(), features.n_classes()), cap));
    opts.threads = config.threads;
    p.basis = ols_select(x, gather_labels(features.labels, rows), features.n_classes(), opts);
  } else {
    p.standardizer = Standardizer::fit(x);
  }
  return p;
}

void fit_classifier(TrainedPipeline& p, const FeatureSet& features, const std::vector<Eigen::Index>& rows,
                    const PipelineConfig& config) {
  const Eigen::MatrixXd z = p.reduce(gather_rows(features.values, rows));
  const double sigma2 = estimate_bandwidth(z, config.bandwidth_squared_norm);
  p.model = train(z, gather_labels(features.labels, rows), features.n_classes(), sigma2, svm_options(config));
}

std::vector<int> classify(const TrainedPipeline& p, const Eigen::MatrixXd& raw) {
  if (!p.model) throw PipelineError("pipeline has no trained classifier");
  return predict(*p.model, p.reduce(raw));
}

void save_pipeline(const TrainedPipeline& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  LittleEndianWriter w(out);
  w.magic(kPipelineMagic);
  w.u32(kPipelineFormatVersion);
  w.u64(p.config_hash);
  w.i32(p.input_dim);
  w.f64(p.epsilon);
  w.u64(p.mask.size());
  for (char m : p.mask) w.u8(m ? 1 : 0);
  w.u8(p.ols ? 1 : 0);
  if (p.ols) {
    write_basis(w, p.basis);
  } else {
    write_standardizer(w, p.standardizer);
  }
  w.u8(p.model ? 1 : 0);
  if (p.model) write_model(w, *p.model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TrainedPipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LittleEndianReader r(in);
  r.expect_magic(kPipelineMagic);
  if (const auto v = r.u32(); v != kPipelineFormatVersion) {
    throw FormatError("unsupported pipeline format version " + std::to_string(v));
  }
  TrainedPipeline p;
  p.config_hash = r.u64();
  p.input_dim = r.i32();
  p.epsilon = r.f64();
  const auto n = r.u64();
  if (n != static_cast<std::uint64_t>(p.input_dim)) throw FormatError("mask length does not match the input dimension");
  p.mask.resize(static_cast<std::size_t>(n));
  for (auto& m : p.mask) m = static_cast<char>(r.u8());
  p.ols = r.u8() != 0;
  if (p.ols) {
    p.basis = read_basis(r);
  } else {
    p.standardizer = read_standardizer(r);
  }
  if (r.u8() != 0) p.model = read_model(r);
  return p;
}

double EvalReport::mean_accuracy() const {
  if (splits.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : splits) s += r.test_accuracy;
  return s / static_cast<double>(splits.size());
}

double EvalReport::stddev_accuracy() const {
  if (splits.empty()) return 0.0;
  const double m = mean_accuracy();
  double s = 0.0;
  for (const auto& r : splits) s += (r.test_accuracy - m) * (r.test_accuracy - m);
  return std::sqrt(s / static_cast<double>(splits.size()));
}

EvalReport train_eval(const FeatureSet& features, const PipelineConfig& config, const Logger& log) {
  config.validate();
  if (features.n_classes() < 2) throw PipelineError("need at least two classes");
  EvalReport report;
  report.n_classes = features.n_classes();
  // A canonical partition admits a single evaluation.
  const int splits = features.partition.empty() ? config.splits : 1;
  for (int s = 0; s < splits; ++s) {
    const auto rows = split_rows(features, config, s);
    auto p = fit_reduction(features, rows.train, config);
    fit_classifier(p, features, rows.train, config);

    SplitResult r;
    r.split = s;
    r.n_train = rows.train.size();
    r.n_test = rows.test.size();
    r.input_dim = p.input_dim;
    r.reduced_dim = p.ols ? p.basis.size() : p.input_dim;
    r.epsilon = p.epsilon;
    r.sigma2 = p.model->sigma2;
    r.train_accuracy = accuracy(classify(p, gather_rows(features.values, rows.train)),
                                gather_labels(features.labels, rows.train));
    r.test_accuracy = accuracy(classify(p, gather_rows(features.values, rows.test)),
                               gather_labels(features.labels, rows.test));
    for (const auto& d : p.model->diagnostics) {
      r.max_gap = std::max(r.max_gap, d.gap);
      r.iterations += d.iterations;
    }
    if (p.ols) r.truncated_classes = p.basis.truncated_classes;
    say(log, "split " + std::to_string(s) + ": test accuracy " + std::to_string(r.test_accuracy));
    report.splits.push_back(std::move(r));
  }
  return report;
}

std::string format_report(const EvalReport& report, const std::string& prefix) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << prefix << "n_classes=" << report.n_classes << '\n';
  s << prefix << "splits=" << report.splits.size() << '\n';
  s << prefix << "accuracy_mean=" << report.mean_accuracy() << '\n';
  s << prefix << "accuracy_std=" << report.stddev_accuracy() << '\n';
  for (const auto& r : report.splits) {
    const std::string k = prefix + "split" + std::to_string(r.split) + ".";
    s << k << "test_accuracy=" << r.test_accuracy << '\n';
    s << k << "train_accuracy=" << r.train_accuracy << '\n';
    s << k << "n_train=" << r.n_train << '\n';
    s << k << "n_test=" << r.n_test << '\n';
    s << k << "input_dim=" << r.input_dim << '\n';
    s << k << "reduced_dim=" << r.reduced_dim << '\n';
    s << k << "sigma2=" << r.sigma2 << '\n';
    s << k << "svm_max_gap=" << r.max_gap << '\n';
    s << k << "svm_iterations=" << r.iterations << '\n';
    s << k << "ols_truncated_classes=" << r.truncated_classes.size() << '\n';
  }
  return s.str();
}

std::string format_splits_csv(const EvalReport& report) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << "split,n_train,n_test,input_dim,reduced_dim,sigma2,train_accuracy,test_accuracy\n";
  for (const auto& r : report.splits) {
    s << r.split << ',' << r.n_train << ',' << r.n_test << ',' << r.input_dim << ',' << r.reduced_dim << ','
      << r.sigma2 << ',' << r.train_accuracy << ',' << r.test_accuracy << '\n';
  }
  return s.str();
}

std::vector<AblationEntry> plan_ablation(const PipelineConfig& base) {
  auto variant = [&](const std::string& name, bool roto, int order, bool ols) {
    AblationEntry e{name, base, std::nullopt};
    e.config.roto_translation = roto;
    e.config.order = order;
    e.config.ols = ols;
    return e;
  };
  return {variant("trans_order1", false, 1, false), variant("trans_order2", false, 2, false),
          variant("trans_order2_ols", false, 2, true), variant("roto_order2", true, 2, false),
          variant("roto_order2_ols", true, 2, true)};
}

std::vector<AblationEntry> run_ablation(const PipelineConfig& base, const Logger& log) {
  auto entries = plan_ablation(base);
  std::optional<FeatureSet> translation;
  std::optional<FeatureSet> roto;
  for (auto& e : entries) {
    say(log, "ablate: " + e.name);
    if (e.config.roto_translation) {
      if (!roto) roto = compute_features(e.config, log);
      e.report = train_eval(*roto, e.config, log);
      continue;
    }
    if (!translation) {
      PipelineConfig t = e.config;
      t.order = 2;
      translation = compute_features(t, log);
    }
    if (e.config.order == 1) {
      auto first = translation->select_paths([](const Path& p) { return p.order <= 1; });
      first.header.scattering.max_order = 1;
      e.report = train_eval(first, e.config, log);
    } else {
      e.report = train_eval(*translation, e.config, log);
    }
  }
  return entries;
}

std::string format_ablation_csv(const std::vector<AblationEntry>& entries) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << "configuration,roto_translation,order,ols,accuracy_mean,accuracy_std,splits\n";
  for (const auto& e : entries) {
    s << e.name << ',' << (e.config.roto_translation ? 1 : 0) << ',' << e.config.order << ',' << (e.config.ols ? 1 : 0)
      << ',';
    if (e.report) {
      s << e.report->mean_accuracy() << ',' << e.report->stddev_accuracy() << ',' << e.report->splits.size();
    } else {
      s << ",,";
    }
    s << '\n';
  }
  return s.str();
}

}  // namespace rotoscat
