// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <random>
#include <set>

namespace rotoscat {
namespace {

constexpr double kWr = 0.299;
constexpr double kWg = 0.587;
constexpr double kWb = 0.114;
constexpr double kUmax = 0.436;
constexpr double kVmax = 0.615;

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection keeps the draw unbiased and identical on every platform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

std::vector<std::string> read_name_list(const std::filesystem::path& path) {
  std::vector<std::string> names;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void LabeledDataset::validate() const {
  if (labels.size() != images.size()) throw DatasetError("label count does not match image count");
  if (!sources.empty() && sources.size() != images.size()) throw DatasetError("source count does not match images");
  if (images.empty()) return;
  const int side = images.front().width();
  for (const auto& img : images) {
    if (!img.is_dyadic_square() || img.width() != side) {
      throw DatasetError("images must be dyadic squares of one common side");
    }
  }
  for (int l : labels) {
    if (l < 0 || l >= n_classes()) throw DatasetError("label out of range");
  }
}

std::size_t cifar_record_bytes(CifarVariant variant) {
  return (variant == CifarVariant::k10 ? 1 : 2) + kCifarPixels;
}

std::vector<CifarRecord> read_cifar_batch(const std::filesystem::path& path, CifarVariant variant) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  const auto size = std::filesystem::file_size(path);
  const auto rec = cifar_record_bytes(variant);
  if (size % rec != 0) {
    throw DatasetError("truncated-file: " + path.string() + " holds " + std::to_string(size) +
                       " bytes, not a multiple of " + std::to_string(rec));
  }
  const int label_limit = variant == CifarVariant::k10 ? 10 : 100;
  std::vector<CifarRecord> out(size / rec);
  std::vector<char> buf(rec);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!in.read(buf.data(), static_cast<std::streamsize>(rec))) {
      throw DatasetError("truncated-file: short read in " + path.string());
    }
    auto* p = reinterpret_cast<const std::uint8_t*>(buf.data());
    auto& r = out[i];
    if (variant == CifarVariant::k100) r.coarse = *p++;
    r.label = *p++;
    if (r.label >= label_limit || (variant == CifarVariant::k100 && r.coarse >= 20)) {
      throw DatasetError("malformed-record-length: record " + std::to_string(i) + " of " + path.string() +
                         " has label " + std::to_string(r.label) + "; wrong variant or record size");
    }
    std::copy(p, p + kCifarPixels, r.pixels.begin());
  }
  return out;
}

void write_cifar_batch(const std::filesystem::path& path, const std::vector<CifarRecord>& records,
                       CifarVariant variant) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot open " + path.string());
  for (const auto& r : records) {
    if (variant == CifarVariant::k100) out.put(static_cast<char>(r.coarse));
    out.put(static_cast<char>(r.label));
    out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
  }
  if (!out) throw DatasetError("write failed: " + path.string());
}

Image cifar_image(const CifarRecord& record) {
  Image img(kCifarSide, kCifarSide, 3);
  auto data = img.data();
  for (std::size_t i = 0; i < kCifarPixels; ++i) data[i] = record.pixels[i] / 255.0;
  return img;
}

CifarRecord cifar_record(const Image& rgb, int label, int coarse) {
  if (rgb.width() != kCifarSide || rgb.height() != kCifarSide || rgb.channels() != 3) {
    throw DatasetError("CIFAR records hold 32x32 RGB images");
  }
  CifarRecord r;
  r.label = static_cast<std::uint8_t>(label);
  r.coarse = static_cast<std::uint8_t>(coarse);
  const auto data = rgb.data();
  for (std::size_t i = 0; i < kCifarPixels; ++i) {
    r.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(data[i] * 255.0), 0L, 255L));
  }
  return r;
}

LabeledDataset load_cifar(const std::filesystem::path& dir, CifarVariant variant, CifarSplit split,
                          bool check_counts) {
  std::vector<std::string> files;
  std::vector<std::string> names;
  const int classes = static_cast<int>(variant);
  if (variant == CifarVariant::k10) {
    if (split == CifarSplit::kTrain) {
      for (int b = 1; b <= 5; ++b) files.push_back("data_batch_" + std::to_string(b) + ".bin");
    } else {
      files.push_back("test_batch.bin");
    }
    names = read_name_list(dir / "batches.meta.txt");
  } else {
    files.push_back(split == CifarSplit::kTrain ? "train.bin" : "test.bin");
    names = read_name_list(dir / "fine_label_names.txt");
  }
  if (static_cast<int>(names.size()) != classes) {
    names.clear();
    for (int c = 0; c < classes; ++c) names.push_back("class_" + std::to_string(c));
  }

  LabeledDataset ds;
  ds.class_names = names;
  ds.provenance = dir.string();
  for (const auto& f : files) {
    const auto records = read_cifar_batch(dir / f, variant);
    for (std::size_t i = 0; i < records.size(); ++i) {
      ds.images.push_back(cifar_image(records[i]));
      ds.labels.push_back(records[i].label);
      ds.sources.push_back(f + "#" + std::to_string(i));
    }
  }
  if (check_counts) {
    const std::size_t expected = split == CifarSplit::kTrain ? 50000 : 10000;
    if (ds.size() != expected) {
      throw DatasetError("CIFAR split has " + std::to_string(ds.size()) + " records, expected " +
                         std::to_string(expected));
    }
    std::vector<std::size_t> per(static_cast<std::size_t>(classes), 0);
    for (int l : ds.labels) ++per[l];
    for (auto p : per) {
      if (p != expected / static_cast<std::size_t>(classes)) throw DatasetError("CIFAR classes are not balanced");
    }
  }
  return ds;
}

LabeledDataset subset_per_class(const LabeledDataset& ds, int per_class, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes()));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (static_cast<int>(idx.size()) < per_class) {
      throw DatasetError("insufficient-class-size: class " + ds.class_names[c] + " has " +
                         std::to_string(idx.size()) + " samples, " + std::to_string(per_class) + " requested");
    }
    seeded_shuffle(idx, seed + c);
    keep.insert(keep.end(), idx.begin(), idx.begin() + per_class);
  }
  std::sort(keep.begin(), keep.end());
  LabeledDataset out;
  out.class_names = ds.class_names;
  out.provenance = ds.provenance;
  out.split_seed = seed;
  for (auto i : keep) {
    out.images.push_back(ds.images[i]);
    out.labels.push_back(ds.labels[i]);
    if (!ds.sources.empty()) out.sources.push_back(ds.sources[i]);
  }
  return out;
}

ImageDirResult load_image_dir(const std::filesystem::path& root, const ImageDirOptions& options) {
  if (!std::filesystem::is_directory(root)) throw DatasetError("not a directory: " + root.string());
  const std::set<std::string> excluded(options.exclude.begin(), options.exclude.end());
  std::vector<std::filesystem::path> class_dirs;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && !excluded.contains(e.path().filename().string())) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  ImageDirResult result;
  auto& ds = result.dataset;
  ds.provenance = root.string();
  for (const auto& dir : class_dirs) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    const int label = ds.n_classes();
    const std::string name = dir.filename().string();
    int loaded = 0;
    for (const auto& f : files) {
      const cv::Mat bgr = cv::imread(f.string(), cv::IMREAD_COLOR);
      if (bgr.empty()) {
        ++result.warnings;
        result.skipped.push_back(f.string());
        continue;
      }
      Image img(bgr.cols, bgr.rows, 3);
      for (int r = 0; r < bgr.rows; ++r) {
        const auto* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
          for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = row[c][2 - ch] / 255.0;
        }
      }
      ds.images.push_back(options.log2_side > 0 ? rescale_square(img, options.log2_side) : std::move(img));
      ds.labels.push_back(label);
      ds.sources.push_back(f.string());
      ++loaded;
    }
    if (loaded == 0) throw DatasetError("empty-class: " + dir.string() + " has no readable image");
    ds.class_names.push_back(name);
  }
  if (ds.class_names.empty()) throw DatasetError("no class directories under " + root.string());
  return result;
}

Image rescale_square(const Image& x, int log2_side) {
  if (log2_side < 3 || log2_side > 16) throw DatasetError("rescale target 2^d needs 3 <= d <= 16");
  if (x.width() <= 0 || x.height() <= 0 || x.channels() <= 0) throw DatasetError("degenerate-input: empty image");
  const int side = 1 << log2_side;
  if (x.width() == side && x.height() == side) return x;
  Image y(side, side, x.channels());
  const double sx = static_cast<double>(x.width()) / side;
  const double sy = static_cast<double>(x.height()) / side;
  for (int r = 0; r < side; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(x.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, x.height() - 1);
    const double wy = fy - y0;
    for (int c = 0; c < side; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(x.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, x.width() - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < x.channels(); ++ch) {
        const double top = (1 - wx) * x.at(ch, y0, x0) + wx * x.at(ch, y0, x1);
        const double bottom = (1 - wx) * x.at(ch, y1, x0) + wx * x.at(ch, y1, x1);
        y.at(ch, r, c) = (1 - wy) * top + wy * bottom;
      }
    }
  }
  return y;
}

Image rgb_to_yuv(const Image& rgb) {
  if (rgb.channels() != 3) throw DatasetError("channel-count: YUV conversion needs 3 channels");
  Image out(rgb.width(), rgb.height(), 3);
  const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto y = out.plane(0), u = out.plane(1), v = out.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    y[i] = kWr * r[i] + kWg * g[i] + kWb * b[i];
    u[i] = kUmax * (b[i] - y[i]) / (1.0 - kWb);
    v[i] = kVmax * (r[i] - y[i]) / (1.0 - kWr);
  }
  return out;
}

Image yuv_to_rgb(const Image& yuv) {
  if (yuv.channels() != 3) throw DatasetError("channel-count: YUV conversion needs 3 channels");
  Image out(yuv.width(), yuv.height(), 3);
  const auto y = yuv.plane(0), u = yuv.plane(1), v = yuv.plane(2);
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    r[i] = y[i] + v[i] * (1.0 - kWr) / kVmax;
    b[i] = y[i] + u[i] * (1.0 - kWb) / kUmax;
    g[i] = (y[i] - kWr * r[i] - kWb * b[i]) / kWg;
  }
  return out;
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

std::vector<char> split_mask(const std::vector<int>& labels, int n_classes, int n_train_per_class,
                             std::uint64_t seed) {
  if (n_train_per_class < 1) throw DatasetError("n_train_per_class must be positive");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw DatasetError("label out of range");
    by_class[labels[i]].push_back(i);
  }
  std::vector<char> in_train(labels.size(), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (static_cast<int>(idx.size()) <= n_train_per_class) {
      throw DatasetError("insufficient-class-size: class " + std::to_string(c) + " has " +
                         std::to_string(idx.size()) + " samples, needs more than " +
                         std::to_string(n_train_per_class));
    }
    seeded_shuffle(idx, seed ^ (0x9E3779B97F4A7C15ULL * (c + 1)));
    for (int k = 0; k < n_train_per_class; ++k) in_train[idx[k]] = 1;
  }
  return in_train;
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, int n_train_per_class,
                                                           std::uint64_t seed) {
  const auto in_train = split_mask(ds.labels, ds.n_classes(), n_train_per_class, seed);
  std::pair<LabeledDataset, LabeledDataset> out;
  for (auto* part : {&out.first, &out.second}) {
    part->class_names = ds.class_names;
    part->provenance = ds.provenance;
    part->split_seed = seed;
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& part = in_train[i] ? out.first : out.second;
    part.images.push_back(ds.images[i]);
    part.labels.push_back(ds.labels[i]);
    if (!ds.sources.empty()) part.sources.push_back(ds.sources[i]);
  }
  return out;
}

std::vector<ManifestEntry> manifest_entries(const LabeledDataset& ds, const std::string& split) {
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.push_back({ds.sources.empty() ? std::to_string(i) : ds.sources[i], ds.class_names[ds.labels[i]], split});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot open " + path.string());
  out << "path,class,split\n";
  for (const auto& e : entries) out << csv_field(e.path) << ',' << csv_field(e.cls) << ',' << csv_field(e.split) << '\n';
  if (!out) throw DatasetError("write failed: " + path.string());
}

LabeledDataset synthetic_textures(int n_classes, int per_class, int log2_side, std::uint64_t seed) {
  if (n_classes < 1 || per_class < 1 || log2_side < 3) throw DatasetError("degenerate-input: synthetic corpus shape");
  const int side = 1 << log2_side;
  const double pi = std::numbers::pi;
  LabeledDataset ds;
  ds.provenance = "synthetic:" + std::to_string(seed);
  ds.split_seed = seed;
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("texture" + std::to_string(c));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Image img(side, side, 3);
      double tint[3];
      for (double& t : tint) t = 0.7 + 0.3 * unit(rng);
      constexpr int kWaves = 3;
      double fx[kWaves], fy[kWaves], phase[kWaves];
      for (int w = 0; w < kWaves; ++w) {
        const double angle = c * pi / n_classes + 0.08 * gauss(rng);
        const double freq = pi * (0.2 + 0.3 * unit(rng));
        fx[w] = freq * std::cos(angle);
        fy[w] = freq * std::sin(angle);
        phase[w] = 2.0 * pi * unit(rng);
      }
      for (int r = 0; r < side; ++r) {
        for (int q = 0; q < side; ++q) {
          double v = 0.0;
          for (int w = 0; w < kWaves; ++w) v += std::cos(fx[w] * q + fy[w] * r + phase[w]);
          v = 0.5 + 0.15 * v + 0.05 * gauss(rng);
          for (int ch = 0; ch < 3; ++ch) img.at(ch, r, q) = std::clamp(tint[ch] * v, 0.0, 1.0);
        }
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(c);
      ds.sources.push_back("synthetic/" + ds.class_names[c] + "/" + std::to_string(i));
    }
  }
  return ds;
}

}  // namespace rotoscat
