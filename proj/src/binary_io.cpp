// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/binary_io.hpp"

#include <bit>
#include <cstring>

namespace rotoscat {
namespace {

template <typename U>
void encode(U v, unsigned char* p) {
  for (std::size_t i = 0; i < sizeof(U); ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

template <typename U>
U decode(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

constexpr std::size_t kChunk = 4096;

}  // namespace

void LittleEndianWriter::bytes(const unsigned char* p, std::size_t n) {
  out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw std::runtime_error("write failed");
}

void LittleEndianWriter::magic(const std::array<char, 4>& tag) {
  bytes(reinterpret_cast<const unsigned char*>(tag.data()), tag.size());
}

void LittleEndianWriter::u8(std::uint8_t v) { bytes(&v, 1); }

void LittleEndianWriter::u32(std::uint32_t v) {
  unsigned char b[4];
  encode(v, b);
  bytes(b, 4);
}

void LittleEndianWriter::i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

void LittleEndianWriter::u64(std::uint64_t v) {
  unsigned char b[8];
  encode(v, b);
  bytes(b, 8);
}

void LittleEndianWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void LittleEndianWriter::f64s(std::span<const double> v) {
  unsigned char buf[kChunk * 8];
  std::size_t i = 0;
  while (i < v.size()) {
    const std::size_t n = std::min(kChunk, v.size() - i);
    for (std::size_t k = 0; k < n; ++k) encode(std::bit_cast<std::uint64_t>(v[i + k]), buf + 8 * k);
    bytes(buf, 8 * n);
    i += n;
  }
}

void LittleEndianWriter::complexes(std::span<const std::complex<double>> v) {
  for (const auto& c : v) {
    f64(c.real());
    f64(c.imag());
  }
}

void LittleEndianWriter::string(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

void LittleEndianReader::bytes(unsigned char* p, std::size_t n) {
  in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("unexpected end of file");
}

void LittleEndianReader::expect_magic(const std::array<char, 4>& tag) {
  std::array<char, 4> got{};
  bytes(reinterpret_cast<unsigned char*>(got.data()), 4);
  if (got != tag) throw FormatError("bad magic: expected " + std::string(tag.begin(), tag.end()));
}

std::uint8_t LittleEndianReader::u8() {
  unsigned char b = 0;
  bytes(&b, 1);
  return b;
}

std::uint32_t LittleEndianReader::u32() {
  unsigned char b[4];
  bytes(b, 4);
  return decode<std::uint32_t>(b);
}

std::int32_t LittleEndianReader::i32() { return static_cast<std::int32_t>(u32()); }

std::uint64_t LittleEndianReader::u64() {
  unsigned char b[8];
  bytes(b, 8);
  return decode<std::uint64_t>(b);
}

double LittleEndianReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> LittleEndianReader::f64s(std::size_t n) {
  std::vector<double> v(n);
  f64s_into(v);
  return v;
}

void LittleEndianReader::f64s_into(std::span<double> out) {
  unsigned char buf[kChunk * 8];
  std::size_t i = 0;
  while (i < out.size()) {
    const std::size_t n = std::min(kChunk, out.size() - i);
    bytes(buf, 8 * n);
    for (std::size_t k = 0; k < n; ++k) out[i + k] = std::bit_cast<double>(decode<std::uint64_t>(buf + 8 * k));
    i += n;
  }
}

std::vector<std::complex<double>> LittleEndianReader::complexes(std::size_t n) {
  std::vector<std::complex<double>> v(n);
  for (auto& c : v) {
    const double re = f64();
    const double im = f64();
    c = {re, im};
  }
  return v;
}

std::string LittleEndianReader::string() {
  const auto n = u32();
  if (n > (1u << 24)) throw FormatError("string too long");
  std::string s(n, '\0');
  bytes(reinterpret_cast<unsigned char*>(s.data()), n);
  return s;
}

}  // namespace rotoscat
