// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rotoscat/classifier.hpp"
#include "rotoscat/config.hpp"
#include "rotoscat/datasets.hpp"
#include "rotoscat/feature_file.hpp"
#include "rotoscat/features.hpp"
#include "rotoscat/filter_bank.hpp"

namespace rotoscat {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional progress sink; receives one line per stage.
using Logger = std::function<void(const std::string&)>;

/// Images of the configured dataset. `partition` is filled for corpora with a
/// canonical split (CIFAR) and empty for pools split at evaluation time.
struct Corpus {
  LabeledDataset data;
  std::vector<Partition> partition;
};

Corpus load_corpus(const PipelineConfig& config);

/// Spatial and angular banks for the config, read from or written to
/// config.filter_cache when that is set.
FilterBanks build_banks(const PipelineConfig& config);

/// Scatters every image (after the optional YUV conversion) in parallel.
FeatureSet transform_corpus(const Corpus& corpus, const PipelineConfig& config, const Logger& log = {});

/// Where the feature file for this config lives under config.cache_dir.
std::filesystem::path feature_cache_path(const PipelineConfig& config);

/// load_corpus + transform_corpus, reusing a cached feature file whose header
/// matches. Writes the cache when cache_dir is set.
FeatureSet compute_features(const PipelineConfig& config, const Logger& log = {});

/// Columns that receive the log: everything except signed order-0 chroma.
std::vector<char> log_mask(const FeatureHeader& header);

struct SplitRows {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Canonical partition when the feature set has one; otherwise a per-class
/// draw of dataset.train_per_class training rows seeded by seed + split.
SplitRows split_rows(const FeatureSet& features, const PipelineConfig& config, int split);

/// Everything fitted on a training split: log floor, reduction, classifier.
struct TrainedPipeline {
  std::uint64_t config_hash = 0;
  int input_dim = 0;
  double epsilon = 0.0;
  std::vector<char> mask;
  bool ols = true;
  SelectedBasis basis;
  Standardizer standardizer;
  std::optional<KernelModel> model;

  /// Raw scattering rows to classifier inputs.
  Eigen::MatrixXd reduce(const Eigen::MatrixXd& raw) const;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& values, const std::vector<Eigen::Index>& rows);
std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<Eigen::Index>& rows);

/// Log floor plus OLS (or plain standardization) on the given rows.
TrainedPipeline fit_reduction(const FeatureSet& features, const std::vector<Eigen::Index>& rows,
                              const PipelineConfig& config);
/// Adds the SVM, trained on the reduced rows.
void fit_classifier(TrainedPipeline& pipeline, const FeatureSet& features, const std::vector<Eigen::Index>& rows,
                    const PipelineConfig& config);
std::vector<int> classify(const TrainedPipeline& pipeline, const Eigen::MatrixXd& raw);

void save_pipeline(const TrainedPipeline& pipeline, const std::filesystem::path& path);
TrainedPipeline load_pipeline(const std::filesystem::path& path);
inline constexpr std::uint32_t kPipelineFormatVersion = 1;

struct SplitResult {
  int split = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int input_dim = 0;
  int reduced_dim = 0;
  double epsilon = 0.0;
  double sigma2 = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double max_gap = 0.0;
  std::int64_t iterations = 0;
  std::vector<int> truncated_classes;
};

struct EvalReport {
  std::vector<SplitResult> splits;
  int n_classes = 0;
  double mean_accuracy() const;
  /// Population standard deviation over splits.
  double stddev_accuracy() const;
};

/// log -> OLS -> SVM -> accuracy on every split.
EvalReport train_eval(const FeatureSet& features, const PipelineConfig& config, const Logger& log = {});

/// key=value lines.
std::string format_report(const EvalReport& report, const std::string& prefix = "");
/// split,n_train,n_test,... one row per split.
std::string format_splits_csv(const EvalReport& report);

/// One line of the ablation table.
struct AblationEntry {
  std::string name;
  PipelineConfig config;
  std::optional<EvalReport> report;
};

/// The five configurations: translation order 1, translation order 2,
/// translation order 2 + OLS, roto-translation order 2, roto-translation
/// order 2 + OLS. Order-1 features are the order <= 1 columns of the order-2
/// transform, so only two transforms are computed.
std::vector<AblationEntry> plan_ablation(const PipelineConfig& base);
std::vector<AblationEntry> run_ablation(const PipelineConfig& base, const Logger& log = {});
std::string format_ablation_csv(const std::vector<AblationEntry>& entries);

}  // namespace rotoscat
