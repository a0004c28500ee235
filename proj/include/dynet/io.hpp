#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/mdnd.hpp"

namespace dynet {

/// Shortest round-trip decimal text for a double; stable across runs, so
/// regenerated files are byte-identical.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("double format failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("bad number: " + std::string(s));
  return out;
}

inline long parse_long(std::string_view s) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer: " + std::string(s));
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

// ---------------------------------------------------------------------------
// Cascade file: a node section of `<index>,<label>` lines, one blank line,
// then one cascade per line `<id>;<index>:<time>,<index>:<time>,...`.
// Omitted nodes are uninfected.
// ---------------------------------------------------------------------------

inline std::string cascades_to_string(const CascadeSet& cs) {
  std::ostringstream out;
  for (int i = 0; i < cs.nodes().size(); ++i)
    out << i << ',' << cs.nodes().label(i) << '\n';
  out << '\n';
  for (const auto& c : cs.cascades()) {
    out << c.id() << ';';
    bool first = true;
    for (const auto& inf : c.infections()) {
      if (!first) out << ',';
      first = false;
      out << inf.node << ':' << format_double(inf.time);
    }
    out << '\n';
  }
  return out.str();
}

inline CascadeSet cascades_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  NodeTable nodes;
  bool in_nodes = true;
  std::vector<Cascade> cascades;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (in_nodes) {
      if (line.empty()) {
        in_nodes = false;
        continue;
      }
      const auto parts = split(line, ',');
      if (parts.size() != 2)
        throw std::invalid_argument("bad node line " + std::to_string(lineno));
      const long idx = parse_long(parts[0]);
      if (idx != nodes.size())
        throw std::invalid_argument("node indices must be dense, line " +
                                    std::to_string(lineno));
      nodes.add(std::string(parts[1]));
      continue;
    }
    if (line.empty()) continue;
    const std::size_t sep = line.find(';');
    if (sep == std::string::npos)
      throw std::invalid_argument("bad cascade line " + std::to_string(lineno));
    std::string id = line.substr(0, sep);
    std::vector<Infection> infections;
    const std::string_view rest = std::string_view(line).substr(sep + 1);
    if (!rest.empty()) {
      for (const auto& item : split(rest, ',')) {
        const auto kv = split(item, ':');
        if (kv.size() != 2)
          throw std::invalid_argument("bad infection record, line " +
                                      std::to_string(lineno));
        infections.push_back({static_cast<NodeIndex>(parse_long(kv[0])),
                              parse_double(kv[1])});
      }
    }
    cascades.emplace_back(std::move(id), std::move(infections));
  }
  return CascadeSet(std::move(cascades), std::move(nodes));
}

// ---------------------------------------------------------------------------
// Ground-truth network file: `<window_index>;<src>,<dst>[,<rate>]` lines;
// a line without the window prefix (no ';') belongs to a static network.
// ---------------------------------------------------------------------------

inline std::string network_to_string(const GroundTruthNetwork& net) {
  std::ostringstream out;
  out << "# nodes: " << net.node_count << '\n';
  for (const auto& [win, edges] : net.snapshots)
    for (const auto& re : edges) {
      if (!net.is_static) out << win << ';';
      out << re.edge.src << ',' << re.edge.dst;
      if (re.rate) out << ',' << format_double(*re.rate);
      out << '\n';
    }
  return out.str();
}

inline GroundTruthNetwork network_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  GroundTruthNetwork net;
  net.is_static = true;
  int max_node = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("nodes:");
      if (pos != std::string::npos) {
        std::string_view v = std::string_view(line).substr(pos + 6);
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        net.node_count = static_cast<int>(parse_long(v));
      }
      continue;
    }
    int window = 0;
    std::string_view body = line;
    const std::size_t sep = line.find(';');
    if (sep != std::string::npos) {
      net.is_static = false;
      window = static_cast<int>(parse_long(std::string_view(line).substr(0, sep)));
      body = std::string_view(line).substr(sep + 1);
    }
    const auto parts = split(body, ',');
    if (parts.size() != 2 && parts.size() != 3)
      throw std::invalid_argument("bad edge line " + std::to_string(lineno));
    RatedEdge re;
    re.edge.src = static_cast<NodeIndex>(parse_long(parts[0]));
    re.edge.dst = static_cast<NodeIndex>(parse_long(parts[1]));
    if (re.edge.src == re.edge.dst)
      throw std::invalid_argument("self-loop on line " + std::to_string(lineno));
    if (parts.size() == 3) {
      re.rate = parse_double(parts[2]);
      if (!(*re.rate > 0.0))
        throw std::invalid_argument("rate must be positive, line " +
                                    std::to_string(lineno));
    }
    max_node = std::max({max_node, re.edge.src, re.edge.dst});
    net.snapshots[window].push_back(re);
  }
  if (net.node_count == 0) net.node_count = max_node + 1;
  if (net.snapshots.empty()) net.snapshots[0] = {};
  return net;
}

// Dynamic rates file: `step;src,dst,rate` lines; same reader/writer
// as the network format with rates mandatory per line.

// ---------------------------------------------------------------------------
// Snapshot CSV: `window_start,src,dst,probability`, sorted by
// (window, src, dst); dense over the node table minus the diagonal.
// ---------------------------------------------------------------------------

inline void append_snapshot_csv(std::ostringstream& out,
                                const EdgeProbabilitySnapshot& snap,
                                double min_prob = 0.0) {
  const auto n = snap.probs.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = snap.probs(i, j);
      if (p < min_prob) continue;
      out << format_double(snap.window_start) << ',' << i << ',' << j << ','
          << format_double(p) << '\n';
    }
}

inline std::string snapshots_to_csv(
    const std::vector<EdgeProbabilitySnapshot>& snaps, double min_prob = 0.0) {
  std::ostringstream out;
  out << "window_start,src,dst,probability\n";
  for (const auto& s : snaps) append_snapshot_csv(out, s, min_prob);
  return out.str();
}

inline std::vector<EdgeProbabilitySnapshot> snapshots_from_csv(
    const std::string& text, int node_count) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::map<double, std::map<DirectedEdge, double>> by_window;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 4)
      throw std::invalid_argument("bad snapshot row: " + line);
    by_window[parse_double(parts[0])][{static_cast<int>(parse_long(parts[1])),
                                       static_cast<int>(parse_long(parts[2]))}] =
        parse_double(parts[3]);
  }
  int n = node_count;
  if (n <= 0) {
    for (const auto& [w, entries] : by_window)
      for (const auto& [e, p] : entries) n = std::max({n, e.src + 1, e.dst + 1});
  }
  std::vector<EdgeProbabilitySnapshot> out;
  for (const auto& [w, entries] : by_window) {
    EdgeProbabilitySnapshot snap;
    snap.window_start = w;
    snap.probs = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [e, p] : entries) snap.probs(e.src, e.dst) = p;
    out.push_back(std::move(snap));
  }
  return out;
}

// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// FNV-1a digest of a file's bytes, recorded in run manifests.
inline std::string content_digest(const std::string& content) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(content)));
  return buf;
}

}  // namespace dynet
