#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/io.hpp"
#include "dynet/mdnd.hpp"

namespace dynet {

using EdgeSet = std::set<DirectedEdge>;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PrecisionRecall precision_recall_f1(const EdgeSet& pred,
                                           const EdgeSet& truth) {
  std::size_t hit = 0;
  for (const auto& e : pred) hit += truth.count(e);
  PrecisionRecall out;
  out.precision = pred.empty() ? 0.0 : double(hit) / double(pred.size());
  out.recall = truth.empty() ? 0.0 : double(hit) / double(truth.size());
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall /
                     (out.precision + out.recall);
  return out;
}

struct BinarizeMode {
  enum class Kind { kTopM, kThreshold, kBestF1 };
  Kind kind = Kind::kTopM;
  long m = 0;            // 0 = |truth| when truth available
  double threshold = 0.5;
};

/// Deterministic thresholding of a probability snapshot into an edge set.
/// top-m keeps the m highest positive entries (ties by (src,dst) order);
/// best-f1 sweeps the distinct values against the truth.
inline EdgeSet binarize(const EdgeProbabilitySnapshot& snap,
                        const BinarizeMode& mode,
                        const EdgeSet* truth = nullptr) {
  std::vector<std::pair<double, DirectedEdge>> scored;
  const auto n = snap.probs.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = snap.probs(i, j);
      if (p > 0.0)
        scored.push_back({p, {static_cast<NodeIndex>(i), static_cast<NodeIndex>(j)}});
    }
  switch (mode.kind) {
    case BinarizeMode::Kind::kTopM: {
      long m = mode.m;
      if (m <= 0) {
        if (!truth)
          throw InvalidConfigError("top-m binarization needs m or the truth");
        m = static_cast<long>(truth->size());
      }
      std::sort(scored.begin(), scored.end(),
                [](const auto& a, const auto& b) {
                  return a.first != b.first ? a.first > b.first
                                            : a.second < b.second;
                });
      EdgeSet out;
      for (std::size_t i = 0;
           i < scored.size() && i < static_cast<std::size_t>(m); ++i)
        out.insert(scored[i].second);
      return out;
    }
    case BinarizeMode::Kind::kThreshold: {
      EdgeSet out;
      for (const auto& [p, e] : scored)
        if (p >= mode.threshold) out.insert(e);
      return out;
    }
    case BinarizeMode::Kind::kBestF1: {
      if (!truth)
        throw InvalidConfigError("best-f1 binarization needs the truth");
      std::set<double> values;
      for (const auto& [p, e] : scored) values.insert(p);
      double best_f1 = -1.0, best_theta = 1.0;
      for (double theta : values) {
        EdgeSet cand;
        for (const auto& [p, e] : scored)
          if (p >= theta) cand.insert(e);
        const double f1 = precision_recall_f1(cand, *truth).f1;
        if (f1 > best_f1 || (f1 == best_f1 && theta > best_theta)) {
          best_f1 = f1;
          best_theta = theta;
        }
      }
      EdgeSet out;
      for (const auto& [p, e] : scored)
        if (p >= best_theta) out.insert(e);
      return out;
    }
  }
  return {};
}

enum class RankScore { kNoisyOr, kMaxSource };

/// Uninfected nodes ranked by their chance of being infected next from
/// the current prefix: score(v) = 1 - prod over infected u of
/// (1 - p(u->v)), descending, ties by node index. kMaxSource uses the
/// strongest single source instead.
inline std::vector<NodeIndex> rank_next_infections(
    const Eigen::MatrixXd& probs, const std::vector<NodeIndex>& infected,
    RankScore score = RankScore::kNoisyOr) {
  if (infected.empty())
    throw std::invalid_argument("prefix must contain at least one node");
  const auto n = probs.rows();
  std::vector<char> is_infected(static_cast<std::size_t>(n), 0);
  for (NodeIndex u : infected)
    if (u >= 0 && u < n) is_infected[static_cast<std::size_t>(u)] = 1;
  std::vector<std::pair<double, NodeIndex>> scored;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (is_infected[static_cast<std::size_t>(v)]) continue;
    double s;
    if (score == RankScore::kNoisyOr) {
      double miss = 1.0;
      for (NodeIndex u : infected) miss *= 1.0 - probs(u, v);
      s = 1.0 - miss;
    } else {
      s = 0.0;
      for (NodeIndex u : infected) s = std::max(s, probs(u, v));
    }
    scored.push_back({s, static_cast<NodeIndex>(v)});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<NodeIndex> out;
  out.reserve(scored.size());
  for (const auto& [s, v] : scored) out.push_back(v);
  return out;
}

/// One next-infection prediction event: the ranking produced from a
/// cascade prefix and the node(s) actually infected next.
struct RankingEvent {
  std::vector<NodeIndex> ranking;
  std::vector<NodeIndex> realized;
};

struct RankMetrics {
  std::map<int, double> hits_at_k;
  std::map<int, double> map_at_k;
};

/// Hits@k = fraction of events whose realized next node appears in the
/// top k; MAP@k = mean average precision truncated at k.
inline RankMetrics map_hits_at_k(const std::vector<RankingEvent>& events,
                                 const std::vector<int>& ks) {
  for (int k : ks)
    if (k <= 0) throw std::invalid_argument("k must be positive");
  RankMetrics out;
  for (int k : ks) {
    double hits = 0.0, ap = 0.0;
    for (const auto& ev : events) {
      const std::set<NodeIndex> relevant(ev.realized.begin(),
                                         ev.realized.end());
      std::size_t found = 0;
      double precision_sum = 0.0;
      bool any = false;
      const std::size_t depth =
          std::min<std::size_t>(static_cast<std::size_t>(k), ev.ranking.size());
      for (std::size_t r = 0; r < depth; ++r) {
        if (relevant.count(ev.ranking[r])) {
          any = true;
          ++found;
          precision_sum += double(found) / double(r + 1);
        }
      }
      hits += any ? 1.0 : 0.0;
      const std::size_t denom =
          std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k));
      if (denom > 0) ap += precision_sum / double(denom);
    }
    const double n = events.empty() ? 1.0 : double(events.size());
    out.hits_at_k[k] = hits / n;
    out.map_at_k[k] = ap / n;
  }
  return out;
}

/// Expands a cascade into one ranking event per prefix length 1..len-1.
/// Simultaneous infections enter the prefix together and are realized
/// together.
inline std::vector<RankingEvent> prediction_events(
    const Eigen::MatrixXd& probs, const Cascade& c,
    RankScore score = RankScore::kNoisyOr) {
  std::vector<RankingEvent> events;
  const auto& inf = c.infections();
  std::vector<NodeIndex> prefix;
  std::size_t i = 0;
  while (i < inf.size()) {
    std::size_t j = i;
    while (j < inf.size() && inf[j].time == inf[i].time) ++j;
    if (!prefix.empty()) {
      RankingEvent ev;
      ev.ranking = rank_next_infections(probs, prefix, score);
      for (std::size_t t = i; t < j; ++t) ev.realized.push_back(inf[t].node);
      events.push_back(std::move(ev));
    }
    for (std::size_t t = i; t < j; ++t) prefix.push_back(inf[t].node);
    i = j;
  }
  return events;
}

struct MetricsRow {
  double window_start = 0.0;
  std::string metric;
  int k = 0;  // 0 = not applicable
  double value = 0.0;
};

inline std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "window_start,metric,k,value\n";
  for (const auto& r : rows)
    out << format_double(r.window_start) << ',' << r.metric << ',' << r.k
        << ',' << format_double(r.value) << '\n';
  return out.str();
}

}  // namespace dynet
