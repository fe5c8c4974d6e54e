// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "rotoscat/fft.hpp"
#include "rotoscat/filter_bank.hpp"
#include "rotoscat/scattering.hpp"

namespace rotoscat {
namespace {

Image noise_image(int side, int channels, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image x(side, side, channels);
  for (double& v : x.data()) v = u(rng);
  return x;
}

Image quarter_turn(const Image& x) {
  const int n = x.width();
  Image y(n, n, x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    for (int r = 0; r < n; ++r) {
      for (int q = 0; q < n; ++q) y.at(c, r, q) = x.at(c, (n - q) % n, r);
    }
  }
  return y;
}

Image shifted(const Image& x, int dr, int dc) {
  const int n = x.width();
  Image y(n, n, x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    for (int r = 0; r < n; ++r) {
      for (int q = 0; q < n; ++q) y.at(c, r, q) = x.at(c, ((r - dr) % n + n) % n, ((q - dc) % n + n) % n);
    }
  }
  return y;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::size_t path_index(const ScatteringOutput& s, const Path& p) {
  const auto paths = s.paths();
  const auto it = std::lower_bound(paths.begin(), paths.end(), p);
  if (it == paths.end() || *it != p) throw std::logic_error("path not found: " + p.to_string());
  return static_cast<std::size_t>(it - paths.begin());
}

CheckResult check(std::string name, bool passed, double value, double threshold, std::string detail = {}) {
  return CheckResult{std::move(name), passed, false, value, threshold, std::move(detail)};
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.informational || c.passed; });
}

std::string ValidationReport::format() const {
  std::ostringstream s;
  s << std::setprecision(10);
  for (const auto& c : checks) {
    s << c.name << ".status=" << (c.informational ? "info" : (c.passed ? "pass" : "fail")) << '\n';
    s << c.name << ".value=" << c.value << '\n';
    if (!c.informational) s << c.name << ".threshold=" << c.threshold << '\n';
    if (!c.detail.empty()) s << c.name << ".detail=" << c.detail << '\n';
  }
  s << "validation.status=" << (passed() ? "pass" : "fail") << '\n';
  return s.str();
}

ValidationReport run_validation(const PipelineConfig& config, const ValidationOptions& options) {
  config.validate();
  ValidationReport report;
  const int d = config.log2_side;
  const int side = 1 << d;
  const int J = config.resolved_max_scale();
  const int L = config.orientations;
  const int K = config.resolved_angular_scales();
  auto spatial = SpatialFilterBank::build(d, J, L, config.morlet);
  const auto angular = AngularFilterBank::build(L, K, config.morlet);
  if (options.inject_fault) spatial.inject_fault(options.fault_j, options.fault_ell, options.fault_factor);

  // Frame bounds.
  const auto lp = validate_bank(spatial);
  report.checks.push_back(check("littlewood_paley_max", lp.upper_ok, lp.max, 1.0 + lp.tolerance));
  report.checks.push_back(check("littlewood_paley_high_band_min", lp.lower_ok, lp.high_band_min, 1.0 - lp.eta));

  double dc = 0.0;
  for (int j = 1; j <= J; ++j) {
    for (int ell = 0; ell < L; ++ell) dc = std::max(dc, std::abs(spatial.wavelet(j, ell)[0]));
  }
  report.checks.push_back(check("wavelet_zero_mean", dc <= 1e-12, dc, 1e-12));

  // Frame counts per depth against 1 + L j + L^2 j (j - 1).
  {
    std::ostringstream table;
    bool ok = true;
    const int depth_max = std::max(6, J);
    for (int j = 1; j <= depth_max; ++j) {
      ScatteringConfig c{j, L, K, 2, true};
      const auto n = static_cast<std::int64_t>(enumerate_paths(c, 1).size());
      const std::int64_t q = 1 + static_cast<std::int64_t>(L) * j + static_cast<std::int64_t>(L) * L * j * (j - 1);
      ok = ok && n == q && count_frames(j, L) == q;
      table << (j > 1 ? " " : "") << n;
    }
    report.checks.push_back(check("frame_counts", ok, ok ? 0.0 : 1.0, 0.0, table.str()));
  }

  {
    const auto c = completeness_check(J, L);
    CheckResult r{"completeness_value", c.complete, true, c.value, 1.0, c.complete ? ">= 1" : "< 1"};
    report.checks.push_back(r);
  }

  std::mt19937_64 rng(options.seed);
  const ScatteringConfig full = config.scattering();
  const int grid = side >> J;

  // Quarter turn: order-0/1 maps rotate and the orientation index moves by L/2.
  {
    ScatteringConfig first = full;
    first.max_order = 1;
    const Image x = noise_image(side, 1, rng);
    const auto s = scatter(x, spatial, angular, first);
    const auto r = scatter(quarter_turn(x), spatial, angular, first);
    double err = 0.0;
    auto compare = [&](const Path& rotated_path, const Path& original_path) {
      const auto a = r.coefficients(path_index(r, rotated_path));
      const auto b = s.coefficients(path_index(s, original_path));
      for (int p0 = 0; p0 < grid; ++p0) {
        for (int p1 = 0; p1 < grid; ++p1) {
          err = std::max(err, std::abs(a[p0 * grid + p1] - b[((grid - p1) % grid) * grid + p0]));
        }
      }
    };
    compare(Path{0, 0}, Path{0, 0});
    for (int j = 1; j <= J; ++j) {
      for (int ell = 0; ell < L; ++ell) compare(Path{1, 0, j, ell}, Path{1, 0, j, (ell + L / 2) % L});
    }
    const double rel = err / std::max(max_abs(s.flat()), 1e-300);
    report.checks.push_back(check("rotation_covariance", rel < 1e-10, rel, 1e-10, "theta shift L/2"));
  }

  // Translation by 2^J cells permutes the output grid.
  {
    const Image x = noise_image(side, 1, rng);
    const int step = 1 << J;
    const auto s = scatter(x, spatial, angular, full);
    const auto t = scatter(shifted(x, step, 2 * step), spatial, angular, full);
    double err = 0.0;
    for (std::size_t p = 0; p < s.path_count(); ++p) {
      const auto a = s.coefficients(p);
      const auto b = t.coefficients(p);
      for (int r = 0; r < grid; ++r) {
        for (int q = 0; q < grid; ++q) {
          err = std::max(err, std::abs(b[((r + 1) % grid) * grid + (q + 2) % grid] - a[r * grid + q]));
        }
      }
    }
    const double rel = err / std::max(max_abs(s.flat()), 1e-300);
    report.checks.push_back(check("translation_covariance", rel < 1e-10, rel, 1e-10));
  }

  // ||S x - S y|| <= ||x - y||.
  {
    double worst = 0.0;
    for (int i = 0; i < options.contraction_pairs; ++i) {
      const Image x = noise_image(side, 1, rng);
      const Image y = noise_image(side, 1, rng);
      const auto sx = scatter(x, spatial, angular, full);
      const auto sy = scatter(y, spatial, angular, full);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < sx.size(); ++k) num += (sx.flat()[k] - sy.flat()[k]) * (sx.flat()[k] - sy.flat()[k]);
      for (std::size_t k = 0; k < x.data().size(); ++k) den += (x.data()[k] - y.data()[k]) * (x.data()[k] - y.data()[k]);
      worst = std::max(worst, std::sqrt(num / den));
    }
    report.checks.push_back(check("contraction_ratio", worst <= 1.0 + 1e-6, worst, 1.0 + 1e-6));
  }

  // ||W1 x||^2 / ||x||^2 on white noise, full-resolution convolutions.
  {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(side) * side);
    double ex = 0.0;
    for (double& v : x) {
      v = g(rng);
      ex += v * v;
    }
    const auto xh = fft::forward2d(x, side);
    std::vector<Complex> prod(xh.size()), out(xh.size());
    auto energy = [&](std::span<const Complex> filter) {
      for (std::size_t i = 0; i < xh.size(); ++i) prod[i] = xh[i] * filter[i];
      fft::inverse2d(prod, out, side);
      double e = 0.0;
      for (const auto& v : out) e += std::norm(v);
      return e;
    };
    double ew = energy(spatial.lowpass(J));
    for (int j = 1; j <= J; ++j) {
      for (int ell = 0; ell < L; ++ell) ew += energy(spatial.wavelet(j, ell));
    }
    const double ratio = ew / ex;
    report.checks.push_back(check("white_noise_energy_ratio", ratio >= 1.0 - kFrameSlack && ratio <= 1.0 + 1e-6, ratio,
                                  1.0 - kFrameSlack));
  }
  return report;
}

}  // namespace rotoscat
