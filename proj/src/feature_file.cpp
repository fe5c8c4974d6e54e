// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/feature_file.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rotoscat/binary_io.hpp"

namespace rotoscat {
namespace {

constexpr std::array<char, 4> kFeatureMagic{'R', 'S', 'F', 'T'};
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

void write_header(LittleEndianWriter& w, const FeatureSet& f) {
  const auto& h = f.header;
  w.magic(kFeatureMagic);
  w.u32(kFeatureFormatVersion);
  w.i32(h.log2_side);
  w.i32(h.scattering.max_scale);
  w.i32(h.scattering.orientations);
  w.i32(h.scattering.angular_scales);
  w.i32(h.scattering.max_order);
  w.u8(h.scattering.roto_translation ? 1 : 0);
  w.i32(h.channels);
  w.i32(h.grid);
  w.u8(h.yuv ? 1 : 0);
  w.u64(h.config_hash);
  w.u64(h.paths.size());
  for (const auto& p : h.paths) {
    for (int v : {p.order, p.channel, p.j1, p.theta, p.j2, p.beta, p.k}) w.i32(v);
  }
  w.u64(f.class_names.size());
  for (const auto& n : f.class_names) w.string(n);
  w.u64(static_cast<std::uint64_t>(f.values.rows()));
  for (int l : f.labels) w.i32(l);
  w.u8(f.sources.empty() ? 0 : 1);
  for (const auto& s : f.sources) w.string(s);
  w.u8(f.partition.empty() ? 0 : 1);
  for (auto p : f.partition) w.u8(static_cast<std::uint8_t>(p));
}

FeatureSet read_header(LittleEndianReader& r, std::uint64_t& rows) {
  r.expect_magic(kFeatureMagic);
  if (const auto v = r.u32(); v != kFeatureFormatVersion) {
    throw FormatError("unsupported feature format version " + std::to_string(v));
  }
  FeatureSet f;
  auto& h = f.header;
  h.log2_side = r.i32();
  h.scattering.max_scale = r.i32();
  h.scattering.orientations = r.i32();
  h.scattering.angular_scales = r.i32();
  h.scattering.max_order = r.i32();
  h.scattering.roto_translation = r.u8() != 0;
  h.channels = r.i32();
  h.grid = r.i32();
  h.yuv = r.u8() != 0;
  h.config_hash = r.u64();
  const auto npaths = r.u64();
  if (npaths > kMaxCount || h.grid < 1 || h.grid > 1024) throw FormatError("corrupt feature header");
  h.paths.resize(static_cast<std::size_t>(npaths));
  for (auto& p : h.paths) {
    p.order = r.i32();
    p.channel = r.i32();
    p.j1 = r.i32();
    p.theta = r.i32();
    p.j2 = r.i32();
    p.beta = r.i32();
    p.k = r.i32();
  }
  const auto nclasses = r.u64();
  if (nclasses > kMaxCount) throw FormatError("corrupt class table");
  for (std::uint64_t i = 0; i < nclasses; ++i) f.class_names.push_back(r.string());
  rows = r.u64();
  if (rows > kMaxCount) throw FormatError("corrupt row count");
  for (std::uint64_t i = 0; i < rows; ++i) {
    f.labels.push_back(r.i32());
    if (f.labels.back() < 0 || f.labels.back() >= static_cast<int>(nclasses)) throw FormatError("label out of range");
  }
  if (r.u8() != 0) {
    for (std::uint64_t i = 0; i < rows; ++i) f.sources.push_back(r.string());
  }
  if (r.u8() != 0) {
    for (std::uint64_t i = 0; i < rows; ++i) {
      const auto p = r.u8();
      if (p != 1 && p != 2) throw FormatError("bad partition code");
      f.partition.push_back(static_cast<Partition>(p));
    }
  }
  return f;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

const Path& FeatureSet::column_path(Eigen::Index c) const {
  const auto cells = static_cast<Eigen::Index>(header.grid) * header.grid;
  return header.paths.at(static_cast<std::size_t>(c / cells));
}

FeatureSet FeatureSet::select_paths(const std::function<bool(const Path&)>& keep) const {
  FeatureSet out;
  out.header = header;
  out.header.paths.clear();
  out.labels = labels;
  out.class_names = class_names;
  out.sources = sources;
  out.partition = partition;
  const auto cells = static_cast<Eigen::Index>(header.grid) * header.grid;
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < header.paths.size(); ++i) {
    if (keep(header.paths[i])) {
      out.header.paths.push_back(header.paths[i]);
      kept.push_back(static_cast<Eigen::Index>(i));
    }
  }
  out.values.resize(values.rows(), static_cast<Eigen::Index>(kept.size()) * cells);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.values.middleCols(static_cast<Eigen::Index>(i) * cells, cells) = values.middleCols(kept[i] * cells, cells);
  }
  return out;
}

void save_features(const FeatureSet& f, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(f.values.cols()) != f.header.columns()) {
    throw std::invalid_argument("feature matrix width does not match the path table");
  }
  if (f.labels.size() != static_cast<std::size_t>(f.values.rows())) {
    throw std::invalid_argument("label count does not match rows");
  }
  if (!f.partition.empty() && f.partition.size() != f.labels.size()) {
    throw std::invalid_argument("partition count does not match rows");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  LittleEndianWriter w(out);
  write_header(w, f);
  std::vector<double> row(static_cast<std::size_t>(f.values.cols()));
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) row[c] = f.values(i, c);
    w.f64s(row);
  }
}

FeatureSet load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LittleEndianReader r(in);
  std::uint64_t rows = 0;
  auto f = read_header(r, rows);
  const auto cols = static_cast<Eigen::Index>(f.header.columns());
  f.values.resize(static_cast<Eigen::Index>(rows), cols);
  std::vector<double> row(static_cast<std::size_t>(cols));
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
    r.f64s_into(row);
    for (Eigen::Index c = 0; c < cols; ++c) f.values(i, c) = row[c];
  }
  return f;
}

FeatureSet load_feature_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LittleEndianReader r(in);
  std::uint64_t rows = 0;
  auto f = read_header(r, rows);
  f.values.resize(static_cast<Eigen::Index>(rows), 0);
  return f;
}

std::string column_name(const FeatureHeader& header, std::size_t c) {
  const std::size_t cells = static_cast<std::size_t>(header.grid) * header.grid;
  const auto& p = header.paths.at(c / cells);
  const std::size_t cell = c % cells;
  std::ostringstream s;
  s << 'o' << p.order << "_c" << p.channel;
  if (p.j1 != Path::kUnused) s << "_j" << p.j1;
  if (p.theta != Path::kUnused) s << "_t" << p.theta;
  if (p.j2 != Path::kUnused) s << "_j" << p.j2;
  if (p.beta != Path::kUnused) s << "_b" << p.beta;
  if (p.k != Path::kUnused) s << "_k" << p.k;
  s << "_r" << cell / header.grid << 'c' << cell % header.grid;
  return s.str();
}

void export_features_csv(const FeatureSet& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "source,label";
  for (std::size_t c = 0; c < f.header.columns(); ++c) out << ',' << column_name(f.header, c);
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
    out << csv_field(f.sources.empty() ? std::to_string(i) : f.sources[i]) << ',' << f.labels[i];
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) out << ',' << f.values(i, c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace rotoscat
