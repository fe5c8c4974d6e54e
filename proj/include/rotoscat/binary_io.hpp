// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotoscat {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian primitive writer shared by the binary containers.
class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(std::ostream& out) : out_(out) {}

  void magic(const std::array<char, 4>& tag);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void i32(std::int32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  void complexes(std::span<const std::complex<double>> v);
  void string(const std::string& s);

 private:
  void bytes(const unsigned char* p, std::size_t n);
  std::ostream& out_;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(std::istream& in) : in_(in) {}

  /// Throws FormatError if the next four bytes are not `tag`.
  void expect_magic(const std::array<char, 4>& tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::int32_t i32();
  std::uint64_t u64();
  double f64();
  std::vector<double> f64s(std::size_t n);
  void f64s_into(std::span<double> out);
  std::vector<std::complex<double>> complexes(std::size_t n);
  std::string string();

 private:
  void bytes(unsigned char* p, std::size_t n);
  std::istream& in_;
};

}  // namespace rotoscat
