// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rotoscat/image.hpp"

namespace rotoscat {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  /// Per image: source file, or file#record for batch formats.
  std::vector<std::string> sources;
  std::string provenance;
  std::uint64_t split_seed = 0;

  std::size_t size() const { return images.size(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  /// Throws DatasetError unless every image is a dyadic square of one common
  /// side and labels are dense in [0, n_classes).
  void validate() const;
};

// CIFAR binary batches --------------------------------------------------------

enum class CifarVariant { k10 = 10, k100 = 100 };

inline constexpr int kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;

/// One raw record. `coarse` is only present in CIFAR-100 files.
struct CifarRecord {
  std::uint8_t coarse = 0;
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixels> pixels{};  // 1024 R, 1024 G, 1024 B, row-major

  bool operator==(const CifarRecord&) const = default;
};

std::size_t cifar_record_bytes(CifarVariant variant);

/// Errors: "truncated-file" when the size is not a whole number of records,
/// "malformed-record-length" when a label byte is out of range for the variant.
std::vector<CifarRecord> read_cifar_batch(const std::filesystem::path& path, CifarVariant variant);
void write_cifar_batch(const std::filesystem::path& path, const std::vector<CifarRecord>& records,
                       CifarVariant variant);

/// RGB image with samples in [0, 1], and back (rounded, clamped).
Image cifar_image(const CifarRecord& record);
CifarRecord cifar_record(const Image& rgb, int label, int coarse = 0);

enum class CifarSplit { kTrain, kTest };

/// Loads the canonical split from a CIFAR binary directory
/// (data_batch_1..5.bin / test_batch.bin, or train.bin / test.bin for
/// CIFAR-100). With check_counts, the record total and per-class balance must
/// match the published layout.
LabeledDataset load_cifar(const std::filesystem::path& dir, CifarVariant variant, CifarSplit split,
                          bool check_counts = true);

/// Keeps `per_class` samples of every class, chosen by a seeded shuffle,
/// preserving the original order among kept samples.
LabeledDataset subset_per_class(const LabeledDataset& ds, int per_class, std::uint64_t seed);

// Class-per-directory corpora --------------------------------------------------

struct ImageDirOptions {
  std::vector<std::string> exclude{"BACKGROUND_Google"};
  /// Rescale every image to 2^log2_side squares; 0 keeps native sizes.
  int log2_side = 0;
};

struct ImageDirResult {
  LabeledDataset dataset;
  int warnings = 0;
  std::vector<std::string> skipped;
};

/// Classes are subdirectories sorted by name; files are sorted within a class.
/// Unreadable files are skipped and counted; a class left without images is an
/// "empty-class" error.
ImageDirResult load_image_dir(const std::filesystem::path& root, const ImageDirOptions& options = {});

// Image operations -------------------------------------------------------------

/// Bilinear resampling onto a 2^d x 2^d grid with pixel-center alignment
/// (source coordinate (i + 0.5) * in / out - 0.5, clamped at the border).
/// Anisotropic for non-square inputs. Returns the input unchanged when it
/// already has the target shape.
Image rescale_square(const Image& x, int log2_side);

/// BT.601 analog YUV: Y = .299 R + .587 G + .114 B, U = .436 (B - Y) / .886,
/// V = .615 (R - Y) / .701.
Image rgb_to_yuv(const Image& rgb);
Image yuv_to_rgb(const Image& yuv);

/// Deterministic per-class split. Every class needs more than
/// n_train_per_class samples ("insufficient-class-size" otherwise).
std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, int n_train_per_class,
                                                           std::uint64_t seed);

/// The same per-class draw on bare labels: 1 marks a training sample.
std::vector<char> split_mask(const std::vector<int>& labels, int n_classes, int n_train_per_class,
                             std::uint64_t seed);

/// Oriented-texture corpus for smoke runs and tests: class c is a noisy sum of
/// plane waves whose orientation clusters around c * pi / n_classes. RGB in
/// [0, 1], deterministic in `seed`.
LabeledDataset synthetic_textures(int n_classes, int per_class, int log2_side, std::uint64_t seed);

/// Platform-independent uniform shuffle (Fisher-Yates over mt19937_64 with
/// rejection sampling), so splits agree across standard libraries.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

struct ManifestEntry {
  std::string path;
  std::string cls;
  std::string split;
};
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> manifest_entries(const LabeledDataset& ds, const std::string& split);

}  // namespace rotoscat
