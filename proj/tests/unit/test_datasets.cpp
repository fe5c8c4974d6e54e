// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rotoscat/datasets.hpp"
#include "test_support.hpp"

using namespace rotoscat;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rotoscat_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Binary PPM, decoded by the same image reader as PNG/JPEG.
void write_ppm(const fs::path& p, int w, int h, std::uint8_t seed) {
  std::ofstream out(p, std::ios::binary);
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int i = 0; i < w * h * 3; ++i) out.put(static_cast<char>((seed * 37 + i * 11) & 0xFF));
}

std::vector<CifarRecord> random_records(int n, CifarVariant v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CifarRecord> out(static_cast<std::size_t>(n));
  for (auto& r : out) {
    r.label = static_cast<std::uint8_t>(rng() % static_cast<int>(v));
    r.coarse = v == CifarVariant::k100 ? static_cast<std::uint8_t>(rng() % 20) : 0;
    for (auto& p : r.pixels) p = static_cast<std::uint8_t>(rng());
  }
  return out;
}

LabeledDataset class_fixture(int classes, int per_class) {
  LabeledDataset ds;
  for (int c = 0; c < classes; ++c) {
    ds.class_names.push_back("c" + std::to_string(c));
    for (int i = 0; i < per_class; ++i) {
      ds.images.push_back(Image::constant(8, 1, c + i / 100.0));
      ds.labels.push_back(c);
      ds.sources.push_back("img_" + std::to_string(c) + "_" + std::to_string(100 + i));
    }
  }
  return ds;
}

// Tent-weighted sum over every source pixel: an independent route to bilinear
// interpolation at the clamped sample position.
double tent_sample(const Image& x, int ch, double fy, double fx) {
  double acc = 0.0;
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      acc += std::max(0.0, 1.0 - std::abs(fy - r)) * std::max(0.0, 1.0 - std::abs(fx - c)) * x.at(ch, r, c);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("CIFAR batch bytes round-trip exactly") {
  const auto dir = fresh_dir("cifar_rt");
  for (auto v : {CifarVariant::k10, CifarVariant::k100}) {
    const auto records = random_records(2, v, 1);
    const auto path = dir / "batch.bin";
    write_cifar_batch(path, records, v);
    CHECK(fs::file_size(path) == 2 * cifar_record_bytes(v));
    const auto back = read_cifar_batch(path, v);
    CHECK(back == records);
    const auto copy = dir / "copy.bin";
    write_cifar_batch(copy, back, v);
    CHECK(slurp(copy) == slurp(path));
  }
  CHECK(cifar_record_bytes(CifarVariant::k10) == 3073u);
  CHECK(cifar_record_bytes(CifarVariant::k100) == 3074u);
}

TEST_CASE("CIFAR record layout: label byte then R, G, B planes") {
  const auto dir = fresh_dir("cifar_layout");
  std::string bytes(3073, '\0');
  bytes[0] = 7;
  bytes[1] = static_cast<char>(255);          // R at (0, 0)
  bytes[1 + 1024 + 33] = static_cast<char>(51);  // G at (1, 1)
  bytes[1 + 2048 + 1023] = static_cast<char>(102);  // B at (31, 31)
  std::ofstream(dir / "one.bin", std::ios::binary) << bytes;
  const auto recs = read_cifar_batch(dir / "one.bin", CifarVariant::k10);
  REQUIRE(recs.size() == 1u);
  CHECK(recs[0].label == 7);
  const auto img = cifar_image(recs[0]);
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(1, 1, 1) == doctest::Approx(0.2));
  CHECK(img.at(2, 31, 31) == doctest::Approx(0.4));
  CHECK(cifar_record(img, 7) == recs[0]);
}

TEST_CASE("CIFAR reader errors") {
  const auto dir = fresh_dir("cifar_err");
  std::ofstream(dir / "short.bin", std::ios::binary) << std::string(3073 + 100, '\0');
  CHECK_THROWS_WITH_AS(read_cifar_batch(dir / "short.bin", CifarVariant::k10), doctest::Contains("truncated-file"),
                       DatasetError);
  std::string bad(3073, '\0');
  bad[0] = 12;
  std::ofstream(dir / "label.bin", std::ios::binary) << bad;
  CHECK_THROWS_WITH_AS(read_cifar_batch(dir / "label.bin", CifarVariant::k10),
                       doctest::Contains("malformed-record-length"), DatasetError);
  CHECK_THROWS_AS(read_cifar_batch(dir / "missing.bin", CifarVariant::k10), DatasetError);
}

TEST_CASE("load_cifar reads the canonical file set") {
  const auto dir = fresh_dir("cifar_dir");
  std::vector<CifarRecord> all;
  for (int b = 1; b <= 5; ++b) {
    auto recs = random_records(4, CifarVariant::k10, 10 + b);
    write_cifar_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), recs, CifarVariant::k10);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  write_cifar_batch(dir / "test_batch.bin", random_records(3, CifarVariant::k10, 99), CifarVariant::k10);
  std::ofstream(dir / "batches.meta.txt") << "airplane\nautomobile\nbird\ncat\ndeer\ndog\nfrog\nhorse\nship\ntruck\n\n";
  const auto train = load_cifar(dir, CifarVariant::k10, CifarSplit::kTrain, false);
  CHECK(train.size() == 20u);
  CHECK(train.class_names[3] == "cat");
  CHECK(train.sources[5] == "data_batch_2.bin#1");
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(train.labels[i] == all[i].label);
    CHECK(cifar_record(train.images[i], all[i].label) == all[i]);
  }
  CHECK(load_cifar(dir, CifarVariant::k10, CifarSplit::kTest, false).size() == 3u);
  CHECK_THROWS_AS(load_cifar(dir, CifarVariant::k10, CifarSplit::kTrain, true), DatasetError);
  CHECK_NOTHROW(train.validate());
}

TEST_CASE("class-per-directory loading, exclusion and corrupt files") {
  const auto root = fresh_dir("imgdir");
  for (const char* cls : {"cats", "dogs", "BACKGROUND"}) {
    fs::create_directories(root / cls);
    for (int i = 0; i < 3; ++i) write_ppm(root / cls / ("im" + std::to_string(i) + ".ppm"), 20 + i, 12, i);
  }
  ImageDirOptions opts;
  opts.exclude = {"BACKGROUND"};
  auto res = load_image_dir(root, opts);
  CHECK(res.dataset.size() == 6u);
  CHECK(res.dataset.class_names == std::vector<std::string>{"cats", "dogs"});
  CHECK(res.warnings == 0);
  CHECK(res.dataset.images[1].width() == 21);
  // First pixel of the fixture: bytes 0, 11, 22 for seed 0 -> R, G, B.
  CHECK(res.dataset.images[0].at(0, 0, 0) == 0.0);
  CHECK(res.dataset.images[0].at(1, 0, 0) == doctest::Approx(11 / 255.0));
  CHECK(res.dataset.images[0].at(2, 0, 0) == doctest::Approx(22 / 255.0));

  opts.exclude.clear();
  CHECK(load_image_dir(root, opts).dataset.n_classes() == 3);

  std::ofstream(root / "dogs" / "broken.png", std::ios::binary) << "not an image";
  opts.exclude = {"BACKGROUND"};
  opts.log2_side = 3;
  std::ofstream(root / "dogs" / "zz.png", std::ios::binary);  // empty file
  fs::remove(root / "dogs" / "zz.png");
  fs::remove(root / "dogs" / "im2.ppm");
  res = load_image_dir(root, opts);
  CHECK(res.dataset.size() == 5u);
  CHECK(res.warnings == 1);
  CHECK(res.skipped.size() == 1u);
  CHECK_NOTHROW(res.dataset.validate());

  fs::create_directories(root / "empty");
  CHECK_THROWS_WITH_AS(load_image_dir(root, opts), doctest::Contains("empty-class"), DatasetError);
  CHECK_THROWS_AS(load_image_dir(root / "nope", opts), DatasetError);
}

TEST_CASE("rescale: identity, constants, range and a bilinear oracle") {
  const auto x = testing::random_image(32, 3, 1);
  const auto same = rescale_square(x, 5);
  CHECK(std::equal(same.data().begin(), same.data().end(), x.data().begin()));

  Image c(45, 17, 2);
  for (auto& v : c.data()) v = 0.375;
  const auto rc = rescale_square(c, 4);
  for (double v : rc.data()) CHECK(v == doctest::Approx(0.375).epsilon(1e-15));

  Image ramp(48, 32, 1);
  for (int r = 0; r < 32; ++r) {
    for (int col = 0; col < 48; ++col) ramp.at(0, r, col) = 0.01 * col + 0.02 * r + 0.001 * ((r * col) % 7);
  }
  const auto y = rescale_square(ramp, 5);
  double err = 0.0;
  for (int r = 0; r < 32; ++r) {
    for (int col = 0; col < 32; ++col) {
      const double fy = std::clamp((r + 0.5) * 32.0 / 32.0 - 0.5, 0.0, 31.0);
      const double fx = std::clamp((col + 0.5) * 48.0 / 32.0 - 0.5, 0.0, 47.0);
      err = std::max(err, std::abs(y.at(0, r, col) - tent_sample(ramp, 0, fy, fx)));
    }
  }
  CHECK(err < 1e-8);

  const auto z = rescale_square(testing::random_image(20, 1, 3), 6);
  CHECK(*std::min_element(z.data().begin(), z.data().end()) >= 0.0);
  CHECK(*std::max_element(z.data().begin(), z.data().end()) <= 1.0);
  CHECK_THROWS_AS(rescale_square(x, 2), DatasetError);
  CHECK_THROWS_AS(rescale_square(Image(), 5), DatasetError);
}

TEST_CASE("BT.601 YUV: pinned values and exact inversion") {
  Image px(3, 1, 3);
  // white, black, pure red
  const double rgb[3][3] = {{1, 1, 1}, {0, 0, 0}, {1, 0, 0}};
  for (int i = 0; i < 3; ++i) {
    for (int ch = 0; ch < 3; ++ch) px.at(ch, 0, i) = rgb[i][ch];
  }
  const auto yuv = rgb_to_yuv(px);
  CHECK(yuv.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(yuv.at(1, 0, 0)) < 1e-15);
  CHECK(std::abs(yuv.at(2, 0, 0)) < 1e-15);
  for (int ch = 0; ch < 3; ++ch) CHECK(yuv.at(ch, 0, 1) == 0.0);
  CHECK(yuv.at(0, 0, 2) == doctest::Approx(0.299));
  CHECK(yuv.at(1, 0, 2) == doctest::Approx(-0.436 * 0.299 / 0.886));
  CHECK(yuv.at(2, 0, 2) == doctest::Approx(0.615));

  const auto x = testing::random_image(16, 3, 4);
  const auto back = yuv_to_rgb(rgb_to_yuv(x));
  CHECK(testing::relative_error(back.data(), x.data()) < 1e-10);
  CHECK_THROWS_AS(rgb_to_yuv(Image(4, 4, 1)), DatasetError);
}

TEST_CASE("train/test split: counts, determinism, disjointness, seed variety") {
  const auto ds = class_fixture(5, 40);
  const auto [train, test] = split_train_test(ds, 30, 7);
  CHECK(train.size() == 150u);
  CHECK(test.size() == 50u);
  for (int c = 0; c < 5; ++c) CHECK(std::count(train.labels.begin(), train.labels.end(), c) == 30);
  std::set<std::string> a(train.sources.begin(), train.sources.end());
  std::set<std::string> b(test.sources.begin(), test.sources.end());
  CHECK(a.size() == 150u);
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  CHECK(both.empty());
  CHECK(a.size() + b.size() == ds.size());

  const auto again = split_train_test(ds, 30, 7);
  CHECK(again.first.sources == train.sources);
  std::set<std::vector<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 5; ++seed) distinct.insert(split_train_test(ds, 30, seed).first.sources);
  CHECK(distinct.size() == 5u);
  CHECK_THROWS_WITH_AS(split_train_test(ds, 40, 1), doctest::Contains("insufficient-class-size"), DatasetError);
}

TEST_CASE("seeded shuffle is a deterministic, roughly uniform permutation") {
  std::vector<int> first_counts(6, 0);
  for (std::uint64_t seed = 0; seed < 6000; ++seed) {
    std::vector<std::size_t> v{0, 1, 2, 3, 4, 5};
    seeded_shuffle(v, seed);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    ++first_counts[v[0]];
  }
  for (int c : first_counts) CHECK(std::abs(c - 1000) < 150);
  std::vector<std::size_t> a(50);
  std::iota(a.begin(), a.end(), 0);
  std::vector<std::size_t> b(a);
  seeded_shuffle(a, 42);
  seeded_shuffle(b, 42);
  CHECK(a == b);
}

TEST_CASE("per-class subset keeps exact counts in original order") {
  const auto ds = class_fixture(3, 20);
  const auto sub = subset_per_class(ds, 5, 9);
  CHECK(sub.size() == 15u);
  CHECK(std::is_sorted(sub.sources.begin(), sub.sources.end()));
  CHECK(subset_per_class(ds, 5, 9).sources == sub.sources);
  CHECK_THROWS_AS(subset_per_class(ds, 21, 9), DatasetError);
}

TEST_CASE("manifest CSV quotes awkward fields") {
  const auto dir = fresh_dir("manifest");
  write_manifest(dir / "m.csv", {{"a/b.png", "cat", "train"}, {"x,y.png", "say \"hi\"", "test"}});
  CHECK(slurp(dir / "m.csv") == "path,class,split\na/b.png,cat,train\n\"x,y.png\",\"say \"\"hi\"\"\",test\n");
  const auto ds = class_fixture(2, 2);
  const auto entries = manifest_entries(ds, "train");
  CHECK(entries.size() == 4u);
  CHECK(entries[2].cls == "c1");
}

TEST_CASE("dataset validation") {
  auto ds = class_fixture(2, 2);
  CHECK_NOTHROW(ds.validate());
  ds.images[1] = Image(8, 4, 1);
  CHECK_THROWS_AS(ds.validate(), DatasetError);
  ds = class_fixture(2, 2);
  ds.labels[0] = 5;
  CHECK_THROWS_AS(ds.validate(), DatasetError);
}
