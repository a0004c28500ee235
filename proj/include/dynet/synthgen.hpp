#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/parallel.hpp"
#include "dynet/rng.hpp"

namespace dynet {

struct KroneckerParams {
  std::array<double, 4> seed = {0.9, 0.5, 0.5, 0.3};  // row-major 2x2
  int power = 10;
  long target_edges = 2500;
  double rate_min = 0.01, rate_max = 2.0;  // per-edge constant rates
};

struct ForestFireParams {
  int node_count = 1024;
  double forward = 0.2;
  double backward = 0.17;
  double rate_min = 0.01, rate_max = 2.0;
};

/// Stochastic Kronecker graph: edge (i,j) is a Bernoulli draw with
/// probability equal to the product of seed entries over the digit pairs
/// of i and j. The seed is rescaled so the expected edge count matches
/// the target; self-loops are removed.
inline GroundTruthNetwork kronecker_graph(const KroneckerParams& p,
                                          Engine& rng) {
  if (p.power < 1 || p.power > 20)
    throw std::invalid_argument("kronecker power out of range");
  for (double s : p.seed)
    if (s < 0.0 || s > 1.0)
      throw std::invalid_argument("seed entries must lie in [0,1]");
  if (p.target_edges < 1)
    throw std::invalid_argument("target edge count must be positive");
  const double seed_sum = p.seed[0] + p.seed[1] + p.seed[2] + p.seed[3];
  double scale = 1.0;
  if (seed_sum > 0.0)
    scale = std::pow(static_cast<double>(p.target_edges), 1.0 / p.power) /
            seed_sum;
  std::array<double, 4> s = p.seed;
  for (double& x : s) x *= scale;
  const double max_entry = *std::max_element(s.begin(), s.end());
  if (max_entry > 1.0 + 1e-12)
    throw std::invalid_argument(
        "target edge count unreachable: scaled seed entry exceeds 1");
  if (seed_sum == 0.0) s = {0, 0, 0, 0};

  const long n = 1L << p.power;
  GroundTruthNetwork net;
  net.node_count = static_cast<int>(n);
  net.is_static = true;
  auto& edges = net.snapshots[0];
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (i == j) continue;
      double prob = 1.0;
      for (int b = 0; b < p.power && prob > 0.0; ++b) {
        const int bi = static_cast<int>((i >> b) & 1);
        const int bj = static_cast<int>((j >> b) & 1);
        prob *= s[static_cast<std::size_t>(bi * 2 + bj)];
      }
      if (prob >= 1.0 || uniform01(rng) < prob) {
        const double rate =
            p.rate_min + uniform01(rng) * (p.rate_max - p.rate_min);
        edges.push_back({{static_cast<NodeIndex>(i), static_cast<NodeIndex>(j)},
                         rate});
      }
    }
  return net;
}

namespace detail {

/// Geometric count with success probability 1-p: P(X=k) = (1-p) p^k.
inline long sample_geometric(Engine& rng, double p) {
  if (p <= 0.0) return 0;
  long k = 0;
  while (uniform01(rng) < p) ++k;
  return k;
}

}  // namespace detail

/// Forest Fire growth: nodes arrive one at a time, link to a uniformly
/// chosen ambassador and burn outward with geometric forward/backward
/// fan-outs. Every node past the first gets at least one out-edge to an
/// earlier node.
inline GroundTruthNetwork forest_fire(const ForestFireParams& p, Engine& rng) {
  if (p.node_count < 1)
    throw std::invalid_argument("node count must be >= 1");
  if (p.forward < 0.0 || p.forward >= 1.0 || p.backward < 0.0 ||
      p.backward >= 1.0)
    throw std::invalid_argument("burning probabilities must lie in [0,1)");
  GroundTruthNetwork net;
  net.node_count = p.node_count;
  net.is_static = true;
  auto& edges = net.snapshots[0];
  std::vector<std::vector<NodeIndex>> out_adj(
      static_cast<std::size_t>(p.node_count));
  std::vector<std::vector<NodeIndex>> in_adj(
      static_cast<std::size_t>(p.node_count));
  for (NodeIndex v = 1; v < p.node_count; ++v) {
    const auto ambassador =
        static_cast<NodeIndex>(uniform_below(rng, static_cast<std::uint64_t>(v)));
    std::set<NodeIndex> burned;
    std::queue<NodeIndex> frontier;
    burned.insert(ambassador);
    frontier.push(ambassador);
    while (!frontier.empty()) {
      const NodeIndex w = frontier.front();
      frontier.pop();
      const long fwd = detail::sample_geometric(rng, p.forward);
      const long bwd = detail::sample_geometric(rng, p.backward);
      auto burn_from = [&](const std::vector<NodeIndex>& nbrs, long quota) {
        std::vector<NodeIndex> fresh;
        for (NodeIndex x : nbrs)
          if (!burned.count(x)) fresh.push_back(x);
        for (long t = 0; t < quota && !fresh.empty(); ++t) {
          const auto pick = static_cast<std::size_t>(
              uniform_below(rng, fresh.size()));
          const NodeIndex x = fresh[pick];
          fresh.erase(fresh.begin() + static_cast<std::ptrdiff_t>(pick));
          burned.insert(x);
          frontier.push(x);
        }
      };
      burn_from(out_adj[static_cast<std::size_t>(w)], fwd);
      burn_from(in_adj[static_cast<std::size_t>(w)], bwd);
    }
    for (NodeIndex w : burned) {
      const double rate =
          p.rate_min + uniform01(rng) * (p.rate_max - p.rate_min);
      edges.push_back({{v, w}, rate});
      out_adj[static_cast<std::size_t>(v)].push_back(w);
      in_adj[static_cast<std::size_t>(w)].push_back(v);
    }
  }
  return net;
}

// ---------------------------------------------------------------------------
// Edge-rate evolution patterns
// ---------------------------------------------------------------------------

enum class PatternKind { kSlab, kHump, kSquare, kChainsaw, kConstant };

/// One edge's rate trajectory: a named waveform with its drawn shape
/// parameters. rate_at(t) >= 0 for every step; an edge is present at t
/// iff its rate is > 0.
struct RatePattern {
  PatternKind kind = PatternKind::kConstant;
  double amplitude = 1.0;
  int period = 20;       // Square, Chainsaw
  int phase = 0;         // Square, Chainsaw
  int block_start = 0;   // Slab, Hump
  int block_width = 20;  // Slab, Hump

  double rate_at(int t) const {
    switch (kind) {
      case PatternKind::kConstant:
        return amplitude;
      case PatternKind::kSlab:
        return (t >= block_start && t < block_start + block_width) ? amplitude
                                                                   : 0.0;
      case PatternKind::kHump: {
        if (t < block_start || t >= block_start + block_width) return 0.0;
        const double x =
            static_cast<double>(t - block_start) / block_width;
        return amplitude * 0.5 * (1.0 - std::cos(2.0 * M_PI * x));
      }
      case PatternKind::kSquare:
        return ((t + phase) % period) < period / 2 ? amplitude : 0.0;
      case PatternKind::kChainsaw:
        return amplitude *
               (static_cast<double>((t + phase) % period) + 1.0) / period;
    }
    return 0.0;
  }
};

inline RatePattern draw_pattern(PatternKind kind, int steps, Engine& rng,
                                double rate_min, double rate_max) {
  RatePattern p;
  p.kind = kind;
  p.amplitude = rate_min + uniform01(rng) * (rate_max - rate_min);
  p.period = 10 + static_cast<int>(uniform_below(rng, 21));  // [10, 30]
  p.phase = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(p.period)));
  p.block_width = std::max(1, steps / 5);
  const int latest = std::max(1, steps - p.block_width + 1);
  p.block_start = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(latest)));
  return p;
}

/// Assigns each edge a pattern uniformly at random from the five kinds
/// and rolls the per-step rate trajectories out; an edge appears in a
/// step's snapshot iff its rate there is positive.
inline GroundTruthNetwork evolve_rates(const GroundTruthNetwork& base,
                                       int steps, Engine& rng,
                                       double rate_min = 0.01,
                                       double rate_max = 2.0) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  static constexpr std::array<PatternKind, 5> kKinds = {
      PatternKind::kSlab, PatternKind::kHump, PatternKind::kSquare,
      PatternKind::kChainsaw, PatternKind::kConstant};
  GroundTruthNetwork out;
  out.node_count = base.node_count;
  out.is_static = false;
  const auto& edges = base.at_step(0);
  std::vector<RatePattern> patterns;
  patterns.reserve(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto kind = kKinds[uniform_below(rng, kKinds.size())];
    auto p = draw_pattern(kind, steps, rng, rate_min, rate_max);
    if (kind == PatternKind::kConstant && edges[e].rate)
      p.amplitude = *edges[e].rate;  // long-term edges keep their rate
    patterns.push_back(p);
  }
  for (int t = 0; t < steps; ++t) {
    auto& snap = out.snapshots[t];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double r = patterns[e].rate_at(t);
      if (r > 0.0) snap.push_back({edges[e].edge, r});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuous-time independent-cascade simulation
// ---------------------------------------------------------------------------

enum class TransmissionKind { kExponential, kRayleigh, kPowerLaw };

struct TransmissionModel {
  TransmissionKind kind = TransmissionKind::kExponential;
  double powerlaw_k = 2.0;     // exponent, > 1
  double delta_min = 0.01;     // power-law minimum delay, > 0

  void validate() const {
    if (!(powerlaw_k > 1.0)) throw std::invalid_argument("power-law exponent must exceed 1");
    if (!(delta_min > 0.0)) throw std::invalid_argument("delta_min must be positive");
  }

  /// Transmission delay for an edge with rate alpha, by inversion.
  double sample_delay(double alpha, Engine& rng) const {
    const double u = uniform01_open(rng);
    switch (kind) {
      case TransmissionKind::kExponential:
        return -std::log(u) / alpha;
      case TransmissionKind::kRayleigh:
        return std::sqrt(-2.0 * std::log(u) / alpha);
      case TransmissionKind::kPowerLaw:
        // alpha scales the minimum delay; heavier alpha = faster spread
        return delta_min / alpha * std::pow(u, -1.0 / (powerlaw_k - 1.0));
    }
    return 0.0;
  }
};

struct CascadeSimParams {
  long count = 500;
  double horizon = 10.0;
  int min_infected = 2;   // regenerate below this ...
  int max_attempts = 10;  // ... up to this many times, then keep
  std::string id_prefix = "c";
  double time_offset = 0.0;
  int threads = 0;
};

/// Continuous-time independent cascades over one network snapshot: the
/// root (uniform over nodes with out-degree >= 1) starts at time 0, each
/// live edge draws an independent delay, infection times are earliest
/// arrivals, and anything beyond the horizon is discarded.
inline CascadeSet simulate_cascades(const std::vector<RatedEdge>& edges,
                                    int node_count, const TransmissionModel& tm,
                                    const CascadeSimParams& params,
                                    std::uint64_t master_seed,
                                    std::uint64_t stream_tag = 0) {
  tm.validate();
  if (params.count < 1) throw std::invalid_argument("cascade count must be >= 1");
  if (!(params.horizon > 0.0))
    throw std::invalid_argument("horizon must be positive");
  if (edges.empty()) throw EmptyInputError("network has no live edges");

  std::vector<std::vector<std::pair<NodeIndex, double>>> adj(
      static_cast<std::size_t>(node_count));
  std::vector<NodeIndex> roots;
  for (const auto& re : edges) {
    if (!re.rate || !(*re.rate > 0.0))
      throw std::invalid_argument("live edges need positive rates");
    if (adj[static_cast<std::size_t>(re.edge.src)].empty())
      roots.push_back(re.edge.src);
    adj[static_cast<std::size_t>(re.edge.src)].emplace_back(re.edge.dst,
                                                            *re.rate);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

  std::vector<std::vector<Infection>> results(
      static_cast<std::size_t>(params.count));
  parallel_for(static_cast<std::size_t>(params.count), params.threads,
               [&](std::size_t ci) {
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
      Engine rng = make_engine(master_seed, "cascade",
                               stream_tag * 1000003ull + ci,
                               static_cast<std::uint64_t>(attempt));
      const NodeIndex root =
          roots[uniform_below(rng, roots.size())];
      std::vector<double> best(static_cast<std::size_t>(node_count),
                               std::numeric_limits<double>::infinity());
      using Item = std::pair<double, NodeIndex>;
      std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
      best[static_cast<std::size_t>(root)] = 0.0;
      queue.push({0.0, root});
      std::vector<Infection> infections;
      while (!queue.empty()) {
        const auto [t, u] = queue.top();
        queue.pop();
        if (t > best[static_cast<std::size_t>(u)]) continue;
        infections.push_back({u, t});
        for (const auto& [v, alpha] : adj[static_cast<std::size_t>(u)]) {
          const double tv = t + tm.sample_delay(alpha, rng);
          if (tv <= params.horizon && tv < best[static_cast<std::size_t>(v)]) {
            best[static_cast<std::size_t>(v)] = tv;
            queue.push({tv, v});
          }
        }
      }
      if (static_cast<int>(infections.size()) >= params.min_infected ||
          attempt + 1 == params.max_attempts) {
        results[ci] = std::move(infections);
        return;
      }
    }
  });

  NodeTable table;
  for (int i = 0; i < node_count; ++i) table.add("n" + std::to_string(i));
  std::vector<Cascade> cascades;
  cascades.reserve(static_cast<std::size_t>(params.count));
  for (std::size_t ci = 0; ci < results.size(); ++ci) {
    auto infections = std::move(results[ci]);
    if (params.time_offset != 0.0)
      for (auto& inf : infections) inf.time += params.time_offset;
    cascades.emplace_back(params.id_prefix + std::to_string(ci),
                          std::move(infections));
  }
  return CascadeSet(std::move(cascades), std::move(table));
}

}  // namespace dynet
