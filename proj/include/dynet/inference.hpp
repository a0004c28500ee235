#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/mdnd.hpp"
#include "dynet/parallel.hpp"
#include "dynet/rng.hpp"
#include "dynet/tree_dist.hpp"

namespace dynet {

// -log p is clamped here, i.e. probabilities are floored at 1e-12 when
// fed back as edge weights.
inline constexpr double kMaxFeedbackWeight = 27.631021115928547;  // -log 1e-12

enum class ObsMode { kDppMarginal, kMapTree };

/// Per-cascade sample size: the default |E_c| - 1, a fixed count, or a
/// ratio of |E_c|. Always at least 1.
struct SampleSizeRule {
  enum class Kind { kCandidatesMinusOne, kFixed, kRatio };
  Kind kind = Kind::kCandidatesMinusOne;
  long fixed = 0;
  double ratio = 0.0;

  std::size_t resolve(std::size_t candidate_count) const {
    long q = 0;
    switch (kind) {
      case Kind::kCandidatesMinusOne:
        q = static_cast<long>(candidate_count) - 1;
        break;
      case Kind::kFixed:
        q = fixed;
        break;
      case Kind::kRatio:
        q = static_cast<long>(ratio * static_cast<double>(candidate_count));
        break;
    }
    return static_cast<std::size_t>(std::max<long>(1, q));
  }
};

struct InferenceConfig {
  double window = 1.0;
  SampleSizeRule q;
  double lambda = 1.0;
  int outer_iters = 10;
  int sweeps = 200;
  int burnin = 50;
  int thin = 5;
  double conv_tol = 1e-3;
  std::uint64_t seed = 0;
  ObsMode obs_mode = ObsMode::kDppMarginal;
  Hyperparams hyper;
  bool literal_pe = false;
  bool resample_edges = false;
  bool exact_dpp_sample = false;
  bool literal_weights = false;
  int threads = 0;  // 0 = all cores

  void validate() const {
    if (!(window > 0.0)) throw InvalidConfigError("window must be positive");
    if (!(lambda > 0.0)) throw InvalidConfigError("lambda must be positive");
    if (sweeps < 1) throw InvalidConfigError("need at least one Gibbs sweep");
    if (outer_iters < 1) throw InvalidConfigError("need at least one outer iteration");
    if (burnin < 0 || thin < 1) throw InvalidConfigError("bad burnin/thin");
    if (q.kind == SampleSizeRule::Kind::kFixed && q.fixed < 1)
      throw InvalidConfigError("fixed sample size must be >= 1");
    if (q.kind == SampleSizeRule::Kind::kRatio && !(q.ratio > 0.0))
      throw InvalidConfigError("sample-size ratio must be positive");
    hyper.validate();
  }
};

/// One sampled edge occurrence with its current cluster label.
struct ObservationInstance {
  DirectedEdge edge;
  int cluster = -1;  // -1 = not yet attached
  int cascade_ordinal = -1;
};

struct ObservationEntry {
  DirectedEdge edge;
  long multiplicity = 0;
  std::vector<std::string> cascade_ids;
};

/// The multiset X of sampled edges feeding one Gibbs update: flat
/// instances plus the aggregated per-edge view.
struct ObservationMultiset {
  std::vector<ObservationInstance> instances;
  std::size_t skipped_cascades = 0;  // cascades with no candidate edges

  long total() const { return static_cast<long>(instances.size()); }

  std::vector<ObservationEntry> entries(const CascadeSet& cs) const {
    std::map<DirectedEdge, ObservationEntry> agg;
    for (const auto& inst : instances) {
      auto& e = agg[inst.edge];
      e.edge = inst.edge;
      e.multiplicity += 1;
      if (inst.cascade_ordinal >= 0) {
        const auto& id =
            cs.cascades()[static_cast<std::size_t>(inst.cascade_ordinal)].id();
        if (std::find(e.cascade_ids.begin(), e.cascade_ids.end(), id) ==
            e.cascade_ids.end())
          e.cascade_ids.push_back(id);
      }
    }
    std::vector<ObservationEntry> out;
    out.reserve(agg.size());
    for (auto& [edge, entry] : agg) out.push_back(std::move(entry));
    return out;
  }
};

/// Empty collapsed state: K = 0, M = 0, no known nodes, all mass on the
/// remainder. This is the canonical prior draw of the collapsed
/// representation.
inline MdndState init_model(const InferenceConfig& cfg) {
  return MdndState(cfg.hyper);
}

inline Engine make_gibbs_engine(std::uint64_t seed, int window_index) {
  return make_engine(seed, "gibbs", static_cast<std::uint64_t>(window_index));
}

/// Edge weights for extraction: d = -log p of the model's predictive
/// probability (clamped), falling back to the prior time-gap weights where
/// the model assigns probability 0. literal_weights feeds d = p verbatim.
inline WeightMap feedback_weights(const MdndState& st,
                                  const WeightMap& initial,
                                  const InferenceConfig& cfg) {
  WeightMap d;
  for (const auto& [e, d0] : initial) {
    const double p = st.predictive_edge(e.src, e.dst, cfg.literal_pe);
    if (p <= 0.0) {
      d[e] = d0;
    } else if (cfg.literal_weights) {
      d[e] = p;
    } else {
      d[e] = std::min(-std::log(p), kMaxFeedbackWeight);
    }
  }
  return d;
}

/// Per cascade: build the tree distribution over E_c, then sample q
/// edges by marginal weight (or take the greedy most-probable tree).
/// Cascades without candidate edges are skipped and counted. The round
/// index keeps re-extractions within a window on fresh substreams.
inline ObservationMultiset extract_observations(const CascadeSet& cs,
                                                const WeightMap& weights,
                                                const InferenceConfig& cfg,
                                                std::uint64_t master_seed,
                                                int window_index,
                                                int round = 0) {
  std::vector<std::vector<DirectedEdge>> per_cascade(cs.size());
  std::vector<char> skipped(cs.size(), 0);
  parallel_for(cs.size(), cfg.threads, [&](std::size_t ci) {
    const auto& c = cs.cascades()[ci];
    if (c.distinct_times() < 2) {
      skipped[ci] = 1;
      return;
    }
    auto td = TreeDistribution::from_cascade(c, weights, cfg.lambda);
    if (td.edge_count() == 0) {
      skipped[ci] = 1;
      return;
    }
    Engine rng = make_engine(
        master_seed, "extract",
        (static_cast<std::uint64_t>(window_index) << 16) +
            static_cast<std::uint64_t>(round),
        ci);
    if (cfg.obs_mode == ObsMode::kMapTree) {
      // under literal weights d already IS a probability; otherwise
      // exp(-d) restores the model's predictive up to the clamp
      std::map<DirectedEdge, double> prob;
      for (std::size_t e = 0; e < td.edge_count(); ++e)
        prob[td.edges[e]] = cfg.literal_weights
                                ? td.weights[e]
                                : std::exp(-td.weights[e]);
      per_cascade[ci] = map_tree(c, prob);
    } else if (cfg.exact_dpp_sample) {
      per_cascade[ci] = sample_dpp_edges(td, rng);
    } else {
      per_cascade[ci] =
          sample_observation_edges(td, cfg.q.resolve(td.edge_count()), rng);
    }
  });
  ObservationMultiset out;
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    out.skipped_cascades += skipped[ci];
    for (const auto& e : per_cascade[ci])
      out.instances.push_back({e, -1, static_cast<int>(ci)});
  }
  return out;
}

namespace detail {

// Each node entry breaks a stick off the remainder mass, which shrinks
// geometrically until the next Dirichlet redraw rebalances it. Long runs
// of new nodes (large first windows) would underflow the remainder, so
// the redraw is pulled forward below this floor.
inline constexpr double kBetaRefreshFloor = 1e-100;

/// Attaches one instance: enters unseen endpoints, samples the cluster
/// from the conditional, updates counts.
inline void attach_instance(MdndState& st, ObservationInstance& inst,
                            Engine& rng, bool literal = false) {
  if (st.beta_remainder() < kBetaRefreshFloor) st.sample_node_masses(rng);
  st.ensure_node(inst.edge.src, rng);
  st.ensure_node(inst.edge.dst, rng);
  const auto w =
      st.cluster_conditional(inst.edge.src, inst.edge.dst, literal);
  inst.cluster = static_cast<int>(sample_categorical(rng, w));
  st.add_observation(inst.edge, inst.cluster, rng);
}

inline void relabel_after_retire(std::vector<ObservationInstance>& instances,
                                 int retired) {
  for (auto& inst : instances)
    if (inst.cluster > retired) inst.cluster -= 1;
}

/// Optional reinterpretation of the "sample e" step: redraw the instance's
/// identity from the predictive restricted to its cascade's candidate
/// edges. The instance must currently be detached.
inline void resample_identity(MdndState& st, ObservationInstance& inst,
                              const std::vector<CandidateSet>& candidates,
                              const InferenceConfig& cfg, Engine& rng) {
  if (inst.cascade_ordinal < 0) return;
  const auto& cand =
      candidates[static_cast<std::size_t>(inst.cascade_ordinal)].edges;
  if (cand.empty()) return;
  std::vector<double> w(cand.size());
  double total = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    w[i] = st.predictive_edge(cand[i].src, cand[i].dst, cfg.literal_pe);
    total += w[i];
  }
  if (!(total > 0.0)) return;  // keep the current identity
  inst.edge = cand[sample_categorical(rng, w)];
}

}  // namespace detail

struct UpdateResult {
  EdgeProbabilitySnapshot snapshot;
  std::vector<double> outer_deltas;  // mean |dp| between outer iterations
  std::size_t skipped_cascades = 0;
  long attached_observations = 0;
};

/// One full model update on a cascade set (Gibbs over extracted
/// observations, outer re-extraction loop until the predictive matrix
/// settles). The final multiset stays attached, so the window's data
/// enters the cumulative counts exactly once.
inline UpdateResult update_network_model(MdndState& st, const CascadeSet& cs,
                                         const InferenceConfig& cfg,
                                         int window_index, Engine& gibbs,
                                         double window_start = 0.0) {
  cfg.validate();
  if (cs.empty()) throw EmptyInputError("cascade set is empty");
  const WeightMap init_w = initial_weights(cs);

  std::vector<CandidateSet> candidates;
  if (cfg.resample_edges) {
    candidates.resize(cs.size());
    for (std::size_t ci = 0; ci < cs.size(); ++ci)
      candidates[ci] = candidate_edges(cs.cascades()[ci]);
  }

  UpdateResult result;
  std::vector<ObservationInstance> attached;
  Eigen::MatrixXd prev;
  Eigen::MatrixXd mean_matrix;

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    const WeightMap d = feedback_weights(st, init_w, cfg);
    auto x = extract_observations(cs, d, cfg, cfg.seed, window_index, outer);
    result.skipped_cascades = x.skipped_cascades;

    // the previous iteration's multiset is replaced, not stacked
    for (const auto& inst : attached)
      if (auto retired = st.remove_observation(inst.edge, inst.cluster)) {
        // shifting labels of the not-yet-removed tail keeps them valid
        for (auto& other : attached)
          if (other.cluster > *retired) other.cluster -= 1;
      }
    attached = std::move(x.instances);
    for (auto& inst : attached) detail::attach_instance(st, inst, gibbs, cfg.literal_pe);

    Eigen::MatrixXd accum;
    long retained = 0;
    std::vector<std::size_t> order(attached.size());
    std::iota(order.begin(), order.end(), 0);
    for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
      std::shuffle(order.begin(), order.end(), gibbs);
      for (std::size_t idx : order) {
        auto& inst = attached[idx];
        if (auto retired = st.remove_observation(inst.edge, inst.cluster)) {
          inst.cluster = -1;
          detail::relabel_after_retire(attached, *retired);
        }
        if (cfg.resample_edges)
          detail::resample_identity(st, inst, candidates, cfg, gibbs);
        detail::attach_instance(st, inst, gibbs, cfg.literal_pe);
      }
      st.resample_tables(gibbs);
      st.sample_node_masses(gibbs);
      if (sweep > cfg.burnin && (sweep - cfg.burnin) % cfg.thin == 0) {
        const Eigen::MatrixXd p = st.predictive_matrix(cs.nodes(), cfg.literal_pe);
        if (retained == 0)
          accum = p;
        else
          accum += p;
        ++retained;
      }
    }
    mean_matrix = retained > 0
                      ? Eigen::MatrixXd(accum / static_cast<double>(retained))
                      : st.predictive_matrix(cs.nodes(), cfg.literal_pe);

    if (prev.size() > 0) {
      const double delta = (mean_matrix - prev).cwiseAbs().mean();
      result.outer_deltas.push_back(delta);
      prev = mean_matrix;
      if (delta < cfg.conv_tol) break;
    } else {
      prev = mean_matrix;
    }
  }

  result.attached_observations = static_cast<long>(attached.size());
  result.snapshot = {window_start, mean_matrix};
  return result;
}

struct WindowResult {
  int window_index = 0;
  double window_start = 0.0;
  EdgeProbabilitySnapshot snapshot;
  nlohmann::json checkpoint;
  std::vector<double> outer_deltas;
  long attached_observations = 0;
  std::size_t skipped_cascades = 0;
};

/// Versioned model checkpoint: hyperparameters, count tables, node
/// masses, rng position and the node table. Round-trips byte-identically.
inline nlohmann::json make_checkpoint(const MdndState& st, const Engine& gibbs,
                                      const NodeTable& nodes) {
  nlohmann::json j;
  j["format"] = "dynet-checkpoint";
  j["version"] = 1;
  j["model"] = st.to_json();
  std::ostringstream rng_state;
  rng_state << gibbs;
  j["rng"] = rng_state.str();
  nlohmann::json table = nlohmann::json::array();
  for (int i = 0; i < nodes.size(); ++i) table.push_back(nodes.label(i));
  j["node_table"] = std::move(table);
  return j;
}

struct LoadedCheckpoint {
  MdndState model;
  Engine gibbs;
  NodeTable nodes;
};

inline LoadedCheckpoint load_checkpoint(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "dynet-checkpoint" ||
      j.at("version").get<int>() != 1)
    throw std::invalid_argument("unrecognized checkpoint format");
  LoadedCheckpoint out{MdndState::from_json(j.at("model")), Engine{},
                       NodeTable{}};
  std::istringstream rng_state(j.at("rng").get<std::string>());
  rng_state >> out.gibbs;
  for (const auto& label : j.at("node_table"))
    out.nodes.add(label.get<std::string>());
  return out;
}

/// Windowed online inference: tiles [0, T_max] with windows of width w,
/// warm-starting each window's model from the previous one; no aging
/// factor. Emits one snapshot and checkpoint per window.
inline std::vector<WindowResult> dyference(const CascadeSet& cs,
                                           const InferenceConfig& cfg) {
  cfg.validate();
  if (!cs.has_infections())
    throw EmptyInputError("cascade set has no infections");
  const double t_max = cs.max_time();
  const int n_windows = static_cast<int>(std::floor(t_max / cfg.window)) + 1;

  MdndState st = init_model(cfg);
  std::vector<WindowResult> out;
  out.reserve(static_cast<std::size_t>(n_windows));
  for (int win = 0; win < n_windows; ++win) {
    const double start = static_cast<double>(win) * cfg.window;
    const CascadeSet slice = window_slice(cs, start, cfg.window);
    Engine gibbs = make_gibbs_engine(cfg.seed, win);
    WindowResult wr;
    wr.window_index = win;
    wr.window_start = start;
    bool updated = false;
    if (!slice.empty()) {
      try {
        auto res = update_network_model(st, slice, cfg, win, gibbs, start);
        wr.snapshot = std::move(res.snapshot);
        wr.outer_deltas = std::move(res.outer_deltas);
        wr.attached_observations = res.attached_observations;
        wr.skipped_cascades = res.skipped_cascades;
        updated = true;
      } catch (const EmptyInputError&) {
        // window had cascades but no candidate edges; fall through
      }
    }
    if (!updated)
      wr.snapshot = edge_probability_matrix(st, cs.nodes(), start,
                                            cfg.literal_pe);
    wr.checkpoint = make_checkpoint(st, gibbs, cs.nodes());
    out.push_back(std::move(wr));
  }
  return out;
}

}  // namespace dynet
