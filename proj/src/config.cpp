// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rotoscat {
namespace {

using Json = nlohmann::ordered_json;

Json dataset_json(const DatasetSpec& d) {
  return Json{{"kind", d.kind},
              {"path", d.path},
              {"subset_train_per_class", d.subset_train_per_class},
              {"subset_test_per_class", d.subset_test_per_class},
              {"verify_counts", d.verify_counts},
              {"train_per_class", d.train_per_class},
              {"exclude", d.exclude},
              {"synthetic_classes", d.synthetic_classes},
              {"synthetic_per_class", d.synthetic_per_class}};
}

Json config_json(const PipelineConfig& c) {
  return Json{{"dataset", dataset_json(c.dataset)},
              {"log2_side", c.log2_side},
              {"max_scale", c.max_scale},
              {"orientations", c.orientations},
              {"angular_scales", c.angular_scales},
              {"order", c.order},
              {"roto_translation", c.roto_translation},
              {"yuv", c.yuv},
              {"morlet",
               {{"sigma0", c.morlet.sigma0},
                {"xi0", c.morlet.xi0},
                {"slant", c.morlet.slant},
                {"normalization", to_string(c.morlet.normalization)}}},
              {"log_epsilon_relative", c.log_epsilon_relative},
              {"ols", c.ols},
              {"feature_count", c.feature_count},
              {"per_class", c.per_class},
              {"feature_ratio", c.feature_ratio},
              {"svm_c", c.svm_c},
              {"svm_tolerance", c.svm_tolerance},
              {"svm_max_iterations", c.svm_max_iterations},
              {"bandwidth_squared_norm", c.bandwidth_squared_norm},
              {"seed", c.seed},
              {"splits", c.splits},
              {"threads", c.threads},
              {"cache_dir", c.cache_dir},
              {"filter_cache", c.filter_cache}};
}

// Copies json[key] into `field` when present; rejects keys the template lacks.
void merge(const Json& in, const Json& tmpl, const std::string& where) {
  for (const auto& [key, value] : in.items()) {
    if (!tmpl.contains(key)) throw ConfigError("config-invalid: unknown key " + where + key);
    if (tmpl[key].is_object()) {
      if (!value.is_object()) throw ConfigError("config-invalid: " + where + key + " must be an object");
      merge(value, tmpl[key], where + key + ".");
    }
  }
}

template <class T>
void take(const Json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config-invalid: bad value for ") + key + ": " + e.what());
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

int PipelineConfig::resolved_max_scale() const { return max_scale > 0 ? max_scale : std::max(1, log2_side - 2); }

int PipelineConfig::resolved_angular_scales() const {
  if (angular_scales > 0) return angular_scales;
  int k = 0;
  while ((2 << k) < orientations) ++k;  // 2^K = L/2
  return std::max(1, k);
}

ScatteringConfig PipelineConfig::scattering() const {
  ScatteringConfig s;
  s.max_scale = resolved_max_scale();
  s.orientations = orientations;
  s.angular_scales = resolved_angular_scales();
  s.max_order = order;
  s.roto_translation = roto_translation;
  return s;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config-invalid: " + what); };
  static const std::set<std::string> kinds{"cifar10", "cifar100", "imagedir", "synthetic"};
  if (!kinds.contains(dataset.kind)) fail("dataset.kind must be cifar10, cifar100, imagedir or synthetic");
  if (log2_side < 3 || log2_side > 12) fail("log2_side must be in [3, 12]");
  const int J = resolved_max_scale();
  if (J < 1 || J > log2_side) fail("max_scale must be in [1, log2_side]");
  if (orientations < 4 || (orientations & (orientations - 1)) != 0) fail("orientations must be a power of two >= 4");
  const int K = resolved_angular_scales();
  if (K < 1 || (1 << K) >= orientations) fail("angular_scales must satisfy 1 <= K < log2(L)");
  if (order != 1 && order != 2) fail("order must be 1 or 2");
  if (!(morlet.sigma0 > 0.0) || !(morlet.slant > 0.0)) fail("morlet sigma0 and slant must be positive");
  if (!(log_epsilon_relative > 0.0)) fail("log_epsilon_relative must be positive");
  if (feature_count < 0 || per_class < 0 || feature_ratio < 0.0) fail("feature counts must be non-negative");
  if (ols && feature_count == 0 && per_class == 0 && feature_ratio == 0.0) {
    fail("OLS needs feature_count, per_class or feature_ratio");
  }
  if (!(svm_c > 0.0) || !(svm_tolerance > 0.0) || svm_max_iterations < 1) fail("SVM settings must be positive");
  if (splits < 1) fail("splits must be at least 1");
  if (threads < 0) fail("threads must be non-negative");
  if (dataset.subset_train_per_class < 0 || dataset.subset_test_per_class < 0) fail("subset sizes must be >= 0");
  if (dataset.train_per_class < 1) fail("dataset.train_per_class must be positive");
  if (dataset.synthetic_classes < 2 || dataset.synthetic_per_class < 2) fail("synthetic corpus needs >= 2 x 2");
}

int PipelineConfig::resolved_per_class(std::int64_t dimension, int n_classes) const {
  if (n_classes < 1) throw ConfigError("config-invalid: no classes");
  if (per_class > 0) return per_class;
  const double m = feature_count > 0 ? feature_count : std::round(feature_ratio * static_cast<double>(dimension));
  return std::max(1, static_cast<int>(m) / n_classes);
}

std::string to_json(const PipelineConfig& config) { return config_json(config).dump(2) + "\n"; }

PipelineConfig from_json(const std::string& text, const PipelineConfig& base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config-invalid: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config-invalid: top level must be an object");
  merge(j, config_json(base), "");

  PipelineConfig c = base;
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    take(d, "kind", c.dataset.kind);
    take(d, "path", c.dataset.path);
    take(d, "subset_train_per_class", c.dataset.subset_train_per_class);
    take(d, "subset_test_per_class", c.dataset.subset_test_per_class);
    take(d, "verify_counts", c.dataset.verify_counts);
    take(d, "train_per_class", c.dataset.train_per_class);
    take(d, "exclude", c.dataset.exclude);
    take(d, "synthetic_classes", c.dataset.synthetic_classes);
    take(d, "synthetic_per_class", c.dataset.synthetic_per_class);
  }
  take(j, "log2_side", c.log2_side);
  take(j, "max_scale", c.max_scale);
  take(j, "orientations", c.orientations);
  take(j, "angular_scales", c.angular_scales);
  take(j, "order", c.order);
  take(j, "roto_translation", c.roto_translation);
  take(j, "yuv", c.yuv);
  if (j.contains("morlet")) {
    const auto& m = j["morlet"];
    take(m, "sigma0", c.morlet.sigma0);
    take(m, "xi0", c.morlet.xi0);
    take(m, "slant", c.morlet.slant);
    if (m.contains("normalization")) {
      std::string norm;
      take(m, "normalization", norm);
      try {
        c.morlet.normalization = frame_normalization_from_string(norm);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config-invalid: ") + e.what());
      }
    }
  }
  take(j, "log_epsilon_relative", c.log_epsilon_relative);
  take(j, "ols", c.ols);
  take(j, "feature_count", c.feature_count);
  take(j, "per_class", c.per_class);
  take(j, "feature_ratio", c.feature_ratio);
  take(j, "svm_c", c.svm_c);
  take(j, "svm_tolerance", c.svm_tolerance);
  take(j, "svm_max_iterations", c.svm_max_iterations);
  take(j, "bandwidth_squared_norm", c.bandwidth_squared_norm);
  take(j, "seed", c.seed);
  take(j, "splits", c.splits);
  take(j, "threads", c.threads);
  take(j, "cache_dir", c.cache_dir);
  take(j, "filter_cache", c.filter_cache);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, const PipelineConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config-invalid: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), base);
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << to_json(config);
}

std::uint64_t transform_hash(const PipelineConfig& config) {
  Json j = config_json(config);
  Json key{{"dataset", j["dataset"]},
           {"log2_side", config.log2_side},
           {"max_scale", config.resolved_max_scale()},
           {"orientations", config.orientations},
           {"angular_scales", config.resolved_angular_scales()},
           {"order", config.order},
           {"roto_translation", config.roto_translation},
           {"yuv", config.yuv},
           {"morlet", j["morlet"]},
           {"seed", config.seed}};
  return fnv1a(key.dump());
}

}  // namespace rotoscat
