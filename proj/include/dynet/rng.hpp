#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dynet {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seed for the named substream (label, a, b) of a master seed. All
/// randomness in the pipeline flows from one master seed through these,
/// so any phase can be re-run in isolation and still match a full run.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master ^ fnv1a64(label));
  h = splitmix64(h ^ (a * 0x9e3779b97f4a7c15ull + 1));
  h = splitmix64(h ^ (b * 0xc2b2ae3d27d4eb4full + 1));
  return h;
}

inline Engine make_engine(std::uint64_t master, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0) {
  return Engine(derive_seed(master, label, a, b));
}

// Samplers below consume the engine directly and keep no state of their
// own, so an engine's serialized position fully determines the stream.

/// Uniform on [0,1).
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform on (0,1], safe under log().
inline double uniform01_open(Engine& g) { return 1.0 - uniform01(g); }

/// Uniform integer in [0, n).
inline std::uint64_t uniform_below(Engine& g, std::uint64_t n) {
  // rejection to avoid modulo bias
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

inline double sample_normal(Engine& g) {
  const double u1 = uniform01_open(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
/// Gamma(shape+1) * U^(1/shape).
inline double sample_gamma(Engine& g, double shape) {
  if (shape < 1.0) {
    const double u = uniform01_open(g);
    return sample_gamma(g, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(g);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01_open(g);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

/// Dirichlet draw with the given concentrations; output sums to 1.
inline std::vector<double> sample_dirichlet(Engine& g,
                                            const std::vector<double>& conc) {
  std::vector<double> out(conc.size());
  double total = 0.0;
  for (std::size_t i = 0; i < conc.size(); ++i) {
    out[i] = sample_gamma(g, conc[i]);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

inline double sample_beta_dist(Engine& g, double a, double b) {
  const double x = sample_gamma(g, a);
  const double y = sample_gamma(g, b);
  return x / (x + y);
}

/// Index draw proportional to non-negative weights. Weights must not all
/// be zero.
inline std::size_t sample_categorical(Engine& g,
                                      const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(g) * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.empty() ? 0 : weights.size() - 1;
}

}  // namespace dynet
