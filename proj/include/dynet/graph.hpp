#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynet/errors.hpp"

namespace dynet {

using NodeIndex = int;

/// Dense node indices 0..N-1 with optional unique text labels. Infinity
/// (never infected) is represented by absence from a cascade's infection
/// map, never by a sentinel value.
class NodeTable {
 public:
  NodeTable() = default;

  NodeIndex add(std::string label = {}) {
    const NodeIndex idx = static_cast<NodeIndex>(labels_.size());
    if (!label.empty()) {
      auto [it, inserted] = by_label_.emplace(label, idx);
      if (!inserted)
        throw std::invalid_argument("duplicate node label: " + label);
    }
    labels_.push_back(std::move(label));
    return idx;
  }

  /// Index for the label, adding it if unseen.
  NodeIndex intern(const std::string& label) {
    if (auto it = by_label_.find(label); it != by_label_.end())
      return it->second;
    return add(label);
  }

  std::optional<NodeIndex> find(const std::string& label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
  }

  int size() const { return static_cast<int>(labels_.size()); }
  bool contains(NodeIndex i) const { return i >= 0 && i < size(); }

  const std::string& label(NodeIndex i) const {
    if (!contains(i)) throw std::out_of_range("node index out of range");
    return labels_[i];
  }

  bool operator==(const NodeTable&) const = default;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeIndex> by_label_;
};

struct DirectedEdge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  auto operator<=>(const DirectedEdge&) const = default;
};

struct Infection {
  NodeIndex node = 0;
  double time = 0.0;
  auto operator<=>(const Infection&) const = default;
};

/// One contagion's infection-time record. Times are finite and >= 0; a
/// node appears at most once; omitted nodes are uninfected.
class Cascade {
 public:
  Cascade() = default;

  Cascade(std::string id, std::vector<Infection> infections)
      : id_(std::move(id)), infections_(std::move(infections)) {
    for (const auto& inf : infections_) {
      if (!(inf.time >= 0.0) || !std::isfinite(inf.time))
        throw std::invalid_argument("infection time must be finite and >= 0");
    }
    // time order; node index breaks ties so iteration is deterministic
    std::sort(infections_.begin(), infections_.end(),
              [](const Infection& a, const Infection& b) {
                return a.time != b.time ? a.time < b.time : a.node < b.node;
              });
    std::vector<NodeIndex> seen;
    seen.reserve(infections_.size());
    for (const auto& inf : infections_) seen.push_back(inf.node);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw std::invalid_argument("node appears twice in cascade " + id_);
  }

  const std::string& id() const { return id_; }

  /// Infections sorted by (time, node).
  const std::vector<Infection>& infections() const { return infections_; }

  std::optional<double> time_of(NodeIndex u) const {
    for (const auto& inf : infections_)
      if (inf.node == u) return inf.time;
    return std::nullopt;
  }

  std::size_t size() const { return infections_.size(); }
  bool empty() const { return infections_.empty(); }

  /// Count of distinct infection times; < 2 means no candidate edges.
  std::size_t distinct_times() const {
    std::size_t n = infections_.empty() ? 0 : 1;
    for (std::size_t i = 1; i < infections_.size(); ++i)
      if (infections_[i].time != infections_[i - 1].time) ++n;
    return n;
  }

  bool operator==(const Cascade&) const = default;

 private:
  std::string id_;
  std::vector<Infection> infections_;
};

class CascadeSet {
 public:
  CascadeSet() = default;
  CascadeSet(std::vector<Cascade> cascades, NodeTable nodes)
      : cascades_(std::move(cascades)), nodes_(std::move(nodes)) {
    for (const auto& c : cascades_)
      for (const auto& inf : c.infections())
        if (!nodes_.contains(inf.node))
          throw std::invalid_argument("cascade " + c.id() +
                                      " references unknown node index");
  }

  const std::vector<Cascade>& cascades() const { return cascades_; }
  const NodeTable& nodes() const { return nodes_; }
  std::size_t size() const { return cascades_.size(); }
  bool empty() const { return cascades_.empty(); }

  double max_time() const {
    double t = 0.0;
    for (const auto& c : cascades_)
      for (const auto& inf : c.infections()) t = std::max(t, inf.time);
    return t;
  }

  bool has_infections() const {
    for (const auto& c : cascades_)
      if (!c.empty()) return true;
    return false;
  }

 private:
  std::vector<Cascade> cascades_;
  NodeTable nodes_;
};

struct RatedEdge {
  DirectedEdge edge;
  std::optional<double> rate;  // > 0 when present
};

/// Ground-truth topology, either a single static snapshot or one edge set
/// per time step.
struct GroundTruthNetwork {
  int node_count = 0;
  bool is_static = true;
  std::map<int, std::vector<RatedEdge>> snapshots;

  const std::vector<RatedEdge>& at_step(int step) const {
    if (is_static) return snapshots.at(0);
    auto it = snapshots.find(step);
    if (it == snapshots.end())
      throw std::out_of_range("no snapshot for step " + std::to_string(step));
    return it->second;
  }
};

struct CandidateSet {
  std::vector<DirectedEdge> edges;  // every ordered pair with strictly earlier src
  std::vector<NodeIndex> nodes;     // infected nodes, time order
};

/// E_c and V_c of a cascade: all ordered pairs (u,v) with t_u < t_v, both
/// finite. Ties produce no edge in either direction.
inline CandidateSet candidate_edges(const Cascade& c) {
  CandidateSet out;
  const auto& inf = c.infections();
  out.nodes.reserve(inf.size());
  for (const auto& x : inf) out.nodes.push_back(x.node);
  for (std::size_t i = 0; i < inf.size(); ++i)
    for (std::size_t j = i + 1; j < inf.size(); ++j)
      if (inf[i].time < inf[j].time)
        out.edges.push_back({inf[i].node, inf[j].node});
  return out;
}

/// Keeps infections with time in [start, start+width); drops cascades the
/// slice leaves empty. Cascades are filtered independently.
inline CascadeSet window_slice(const CascadeSet& cs, double start,
                               double width) {
  if (!(width > 0.0))
    throw std::invalid_argument("window width must be positive");
  std::vector<Cascade> kept;
  for (const auto& c : cs.cascades()) {
    std::vector<Infection> in_window;
    for (const auto& inf : c.infections())
      if (inf.time >= start && inf.time < start + width)
        in_window.push_back(inf);
    if (!in_window.empty()) kept.emplace_back(c.id(), std::move(in_window));
  }
  return CascadeSet(std::move(kept), cs.nodes());
}

using WeightMap = std::map<DirectedEdge, double>;

/// Prior edge weights d accumulated from infection-time gaps:
/// d(u,v) = sum over cascades with (u,v) in E_c of t_v - t_u, then rescaled
/// to mean 1 over the support. Edges in no E_c are absent.
inline WeightMap initial_weights(const CascadeSet& cs) {
  WeightMap d;
  for (const auto& c : cs.cascades()) {
    const auto& inf = c.infections();
    for (std::size_t i = 0; i < inf.size(); ++i)
      for (std::size_t j = i + 1; j < inf.size(); ++j)
        if (inf[i].time < inf[j].time)
          d[{inf[i].node, inf[j].node}] += inf[j].time - inf[i].time;
  }
  if (d.empty())
    throw EmptyInputError("no candidate edges in any cascade");
  double mean = 0.0;
  for (const auto& [e, w] : d) mean += w;
  mean /= static_cast<double>(d.size());
  for (auto& [e, w] : d) w /= mean;
  return d;
}

}  // namespace dynet
