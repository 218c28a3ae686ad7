#pragma once

// Test-only reference implementations. Nothing here calls into the code paths
// it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "convnorm/geometry.hpp"
#include "convnorm/kernel.hpp"

namespace convnorm::testing {

/// Brute-force filter of all kernel positions against the class definition.
inline std::set<KernelIndex> brute_force_class(const ConvGeometry& g, KernelIndex anchor) {
  std::set<KernelIndex> out;
  const long slack1 = static_cast<long>(g.h_in + 2 * g.p1) - static_cast<long>(g.k1);
  const long slack2 = static_cast<long>(g.w_in + 2 * g.p2) - static_cast<long>(g.k2);
  for (std::size_t c = 1; c <= g.k1; ++c) {
    for (std::size_t d = 1; d <= g.k2; ++d) {
      const long dc = static_cast<long>(c) - static_cast<long>(anchor.k);
      const long dd = static_cast<long>(d) - static_cast<long>(anchor.t);
      if (dc % static_cast<long>(g.s1) != 0 || dd % static_cast<long>(g.s2) != 0) continue;
      if (dc < 0 || dc > slack1 || dd < 0 || dd > slack2) continue;
      out.insert({c, d});
    }
  }
  return out;
}

/// Convolution over an explicitly zero-padded copy of the input.
inline std::vector<double> padded_conv(const Kernel4D& kernel, const std::vector<double>& input) {
  const ConvGeometry& g = kernel.geometry();
  const std::size_t hp = g.h_in + 2 * g.p1;
  const std::size_t wp = g.w_in + 2 * g.p2;
  std::vector<double> padded(g.d_in * hp * wp, 0.0);
  for (std::size_t j = 0; j < g.d_in; ++j) {
    for (std::size_t u = 0; u < g.h_in; ++u) {
      for (std::size_t v = 0; v < g.w_in; ++v) {
        padded[(j * hp + u + g.p1) * wp + v + g.p2] = input[(j * g.h_in + u) * g.w_in + v];
      }
    }
  }
  const std::size_t ho = g.h_out();
  const std::size_t wo = g.w_out();
  std::vector<double> out(g.d_out * ho * wo, 0.0);
  for (std::size_t i = 0; i < g.d_out; ++i) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.d_in; ++j) {
          for (std::size_t k = 0; k < g.k1; ++k) {
            for (std::size_t t = 0; t < g.k2; ++t) {
              s += kernel.at(i, j, k, t) * padded[(j * hp + y * g.s1 + k) * wp + x * g.s2 + t];
            }
          }
        }
        out[(i * ho + y) * wo + x] = s;
      }
    }
  }
  return out;
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

inline Kernel4D random_kernel(std::mt19937_64& gen, const ConvGeometry& g, double scale = 1.0) {
  return Kernel4D(g, random_vector(gen, g.kernel_size(), -scale, scale));
}

struct GeometryLimits {
  std::size_t max_channels = 4;
  std::size_t max_kernel = 4;
  std::size_t max_stride = 3;
  std::size_t max_pad = 2;
  std::size_t max_input = 12;
};

/// Random valid geometry; `want_assumption` selects which side of the
/// kernel-fit condition to land on.
inline ConvGeometry random_geometry(std::mt19937_64& gen, const GeometryLimits& lim = {},
                                    bool want_assumption = true) {
  auto u = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  };
  for (;;) {
    ConvGeometry g;
    g.d_in = u(1, lim.max_channels);
    g.d_out = u(1, lim.max_channels);
    g.k1 = u(1, lim.max_kernel);
    g.k2 = u(1, lim.max_kernel);
    g.s1 = u(1, lim.max_stride);
    g.s2 = u(1, lim.max_stride);
    g.p1 = u(0, lim.max_pad);
    g.p2 = u(0, lim.max_pad);
    g.h_in = u(std::max<std::size_t>(1, g.k1 > 2 * g.p1 ? g.k1 - 2 * g.p1 : 1), lim.max_input);
    g.w_in = u(std::max<std::size_t>(1, g.k2 > 2 * g.p2 ? g.k2 - 2 * g.p2 : 1), lim.max_input);
    if (g.k1 > g.h_in + 2 * g.p1 || g.k2 > g.w_in + 2 * g.p2) continue;
    if (check_assumption1(g) == want_assumption) return g;
  }
}

/// Central finite difference of f at every kernel entry.
template <typename F>
std::vector<double> finite_difference(const Kernel4D& kernel, F&& f, double step = 1e-6) {
  Kernel4D probe = kernel;
  std::vector<double> grad(kernel.size());
  for (std::size_t n = 0; n < kernel.size(); ++n) {
    const double orig = probe.values()[n];
    probe.values()[n] = orig + step;
    const double up = f(probe);
    probe.values()[n] = orig - step;
    const double down = f(probe);
    probe.values()[n] = orig;
    grad[n] = (up - down) / (2 * step);
  }
  return grad;
}

inline bool rel_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace convnorm::testing
