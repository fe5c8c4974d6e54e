// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/fft.hpp"

#include <fftw3.h>

#include <cassert>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace rotoscat::fft {
namespace {

// FFTW planning is not thread safe; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int side, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(side, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const auto n = static_cast<std::size_t>(side) * side;
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_2d(side, side, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    if (plan == nullptr) throw std::runtime_error("fftw: failed to create plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

void execute(std::span<const Complex> in, std::span<Complex> out, int side, int sign) {
  const auto n = static_cast<std::size_t>(side) * side;
  if (in.size() != n || out.size() != n) throw std::invalid_argument("fft: size mismatch");
  fftw_plan plan = plans().get(side, sign);
  // FFTW's new-array execute takes a non-const input even for out-of-place plans.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  if (src == dst) {
    std::vector<Complex> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()), dst);
  } else {
    fftw_execute_dft(plan, src, dst);
  }
}

}  // namespace

void forward2d(std::span<const Complex> in, std::span<Complex> out, int side) {
  execute(in, out, side, FFTW_FORWARD);
}

void inverse2d(std::span<const Complex> in, std::span<Complex> out, int side) {
  execute(in, out, side, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(side) * side);
  for (auto& v : out) v *= scale;
}

std::vector<Complex> forward2d(std::span<const double> real_in, int side) {
  std::vector<Complex> buf(real_in.begin(), real_in.end());
  std::vector<Complex> out(buf.size());
  forward2d(buf, out, side);
  return out;
}

namespace {

std::vector<Complex> fold(std::span<const Complex> spectrum, int side, int factor, double weight) {
  if (factor < 1 || side % factor != 0) throw std::invalid_argument("fft: bad subsampling factor");
  assert(spectrum.size() == static_cast<std::size_t>(side) * side);
  const int small = side / factor;
  std::vector<Complex> out(static_cast<std::size_t>(small) * small);
  for (int r = 0; r < side; ++r) {
    const int rr = r % small;
    for (int c = 0; c < side; ++c) {
      out[static_cast<std::size_t>(rr) * small + c % small] +=
          spectrum[static_cast<std::size_t>(r) * side + c];
    }
  }
  if (weight != 1.0) {
    for (auto& v : out) v *= weight;
  }
  return out;
}

}  // namespace

std::vector<Complex> subsample_spectrum(std::span<const Complex> spectrum, int side, int factor) {
  return fold(spectrum, side, factor, 1.0 / (static_cast<double>(factor) * factor));
}

std::vector<Complex> periodize_filter(std::span<const Complex> filter, int side, int factor) {
  return fold(filter, side, factor, 1.0);
}

}  // namespace rotoscat::fft
