#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/rng.hpp"
#include "dynet/stirling.hpp"

namespace dynet {

struct Hyperparams {
  double alpha = 1.0;  // cluster concentration
  double tau = 1.0;    // cluster-overlap concentration
  double gamma = 1.0;  // edge-mass concentration

  void validate() const {
    if (!(alpha > 0.0) || !(tau > 0.0) || !(gamma > 0.0))
      throw InvalidConfigError("hyperparameters must be strictly positive");
  }
};

/// Per-cluster collapsed counts: total observations eta, per-node
/// outlink/inlink counts l, and their table counts rho.
struct ClusterCounts {
  long eta = 0;
  std::map<NodeIndex, long> out_links, in_links;
  std::map<NodeIndex, long> out_tables, in_tables;
  long created_seq = 0;
};

/// Per-window posterior predictive probability for every potential edge.
struct EdgeProbabilitySnapshot {
  double window_start = 0.0;
  Eigen::MatrixXd probs;  // (i,j) = p(edge i->j), diagonal 0
};

/// Conditional over the table count rho given l customers and
/// concentration tau*beta: p(rho) proportional to s(l, rho) (tau*beta)^rho,
/// rho = 1..l. Empty vector encodes the l = 0 point mass at rho = 0.
inline std::vector<double> rho_conditional(long l, double tau_beta,
                                           const StirlingTable& table) {
  if (l < 0) throw std::invalid_argument("negative table-count domain");
  if (l == 0) return {};
  if (l > table.n_max())
    throw std::invalid_argument("rho domain exceeds Stirling table");
  const double log_tb = std::log(tau_beta);
  std::vector<double> logw(static_cast<std::size_t>(l));
  double max_lw = -std::numeric_limits<double>::infinity();
  for (long r = 1; r <= l; ++r) {
    logw[static_cast<std::size_t>(r - 1)] =
        table.log_s(static_cast<int>(l), static_cast<int>(r)) +
        static_cast<double>(r) * log_tb;
    max_lw = std::max(max_lw, logw[static_cast<std::size_t>(r - 1)]);
  }
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - max_lw);
    total += w;
  }
  for (double& w : logw) w /= total;
  return logw;
}

/// One CRP pass seating l customers with concentration tau*beta; the
/// number of tables opened is an exact draw from the rho conditional.
inline long simulate_crp_tables(long l, double tau_beta, Engine& rng) {
  long tables = 0;
  for (long i = 0; i < l; ++i) {
    const double p_new = tau_beta / (static_cast<double>(i) + tau_beta);
    if (uniform01(rng) < p_new) ++tables;
  }
  return tables;
}

/// Collapsed state of the mixture-of-Dirichlet-network-distributions
/// model: per-cluster counts, table counts, node masses beta, and the
/// unseen-mass remainder beta_n. Single writer; copy for read-only
/// sharing.
class MdndState {
 public:
  static constexpr int kDefaultStirlingCrossover = 30;

  explicit MdndState(Hyperparams hyper = {})
      : hyper_(hyper), stirling_(kDefaultStirlingCrossover) {
    hyper_.validate();
  }

  const Hyperparams& hyper() const { return hyper_; }
  int cluster_count() const { return static_cast<int>(clusters_.size()); }
  long total_observations() const { return total_obs_; }
  int known_nodes() const { return static_cast<int>(beta_.size()); }
  const std::map<NodeIndex, double>& beta() const { return beta_; }
  double beta_remainder() const { return beta_n_; }
  const std::vector<ClusterCounts>& clusters() const { return clusters_; }
  bool knows_node(NodeIndex u) const { return beta_.count(u) > 0; }

  /// Brings a node into the model's support by breaking a stick off the
  /// remainder mass. No-op for known nodes.
  void ensure_node(NodeIndex u, Engine& rng) {
    if (beta_.count(u)) return;
    const double b = sample_beta_dist(rng, 1.0, hyper_.gamma);
    beta_[u] = b * beta_n_;
    beta_n_ *= 1.0 - b;
  }

  /// Test hook: install an explicit mass vector (must sum to 1).
  void force_beta(std::map<NodeIndex, double> beta, double beta_n) {
    double total = beta_n;
    for (const auto& [u, b] : beta) total += b;
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("beta must sum to 1");
    beta_ = std::move(beta);
    beta_n_ = beta_n;
  }

  /// Normalized distribution over cluster assignment {0..K-1, K = new}
  /// for an edge (u, v), with the observation being resampled already
  /// removed from the state. The default weights carry the same
  /// (eta_k + tau) likelihood normalizers as the predictive, so cluster
  /// granularity responds to alpha; literal = true drops them and uses
  /// the published products verbatim (under which large clusters swallow
  /// everything regardless of alpha).
  std::vector<double> cluster_conditional(NodeIndex u, NodeIndex v,
                                          bool literal = false) const {
    const auto bu = beta_.find(u);
    const auto bv = beta_.find(v);
    if (bu == beta_.end() || bv == beta_.end())
      throw UnknownNodeError("cluster conditional on unknown node");
    std::vector<double> w(clusters_.size() + 1);
    for (std::size_t k = 0; k < clusters_.size(); ++k) {
      const auto& cl = clusters_[k];
      const double src = count_of(cl.out_links, u) + hyper_.tau * bu->second;
      const double dst = count_of(cl.in_links, v) + hyper_.tau * bv->second;
      if (literal) {
        w[k] = static_cast<double>(cl.eta) * src * dst;
      } else {
        const double eta_tau = static_cast<double>(cl.eta) + hyper_.tau;
        w[k] = static_cast<double>(cl.eta) * (src / eta_tau) * (dst / eta_tau);
      }
    }
    w.back() = hyper_.alpha * bu->second * bv->second;
    if (literal) w.back() *= hyper_.tau * hyper_.tau;
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0))
      throw std::runtime_error("degenerate cluster conditional");
    for (double& x : w) x /= total;
    return w;
  }

  /// Posterior predictive probability of the edge (i, j), where nullopt
  /// stands for "a node not yet in the network". The four cases share the
  /// normalization-consistent form: a new endpoint contributes
  /// tau*beta_n/(eta_k+tau) inside cluster terms and beta_n in the
  /// alpha-term, so the full-support sum is exactly 1. literal = true
  /// reproduces the published case factors instead.
  double predictive_edge(std::optional<NodeIndex> i, std::optional<NodeIndex> j,
                         bool literal = false) const {
    double beta_i = beta_n_, beta_j = beta_n_;
    if (i) {
      auto it = beta_.find(*i);
      if (it == beta_.end()) return 0.0;  // known to data, unseen by model
      beta_i = it->second;
    }
    if (j) {
      auto it = beta_.find(*j);
      if (it == beta_.end()) return 0.0;
      beta_j = it->second;
    }
    const double denom = static_cast<double>(total_obs_) + hyper_.alpha;
    double p = hyper_.alpha / denom * beta_i * beta_j;
    if (literal && !i && !j) return beta_n_ * beta_n_;
    for (const auto& cl : clusters_) {
      const double eta_tau = static_cast<double>(cl.eta) + hyper_.tau;
      double src, dst;
      if (literal) {
        src = i ? (count_of(cl.out_links, *i) + hyper_.tau * beta_i) / eta_tau
                : beta_n_;
        if (j) {
          // the published third case pairs the inlink count with the
          // source-side mass; kept verbatim in literal mode
          const double mass = i ? beta_j : beta_n_;
          dst = (count_of(cl.in_links, *j) + hyper_.tau * mass) / eta_tau;
        } else {
          dst = beta_n_;
        }
      } else {
        src = (i ? count_of(cl.out_links, *i) + hyper_.tau * beta_i
                 : hyper_.tau * beta_n_) /
              eta_tau;
        dst = (j ? count_of(cl.in_links, *j) + hyper_.tau * beta_j
                 : hyper_.tau * beta_n_) /
              eta_tau;
      }
      p += static_cast<double>(cl.eta) / denom * src * dst;
    }
    return p;
  }

  /// Adds one observation instance of (u, v) to cluster k; k == K creates
  /// a cluster. Table counts grow by the CRP increment rule: a new table
  /// opens with probability tau*beta/(l + tau*beta).
  void add_observation(const DirectedEdge& e, int k, Engine& rng) {
    if (!beta_.count(e.src) || !beta_.count(e.dst))
      throw UnknownNodeError("add_observation on node outside the model");
    if (k < 0 || k > cluster_count())
      throw BookkeepingError("cluster label out of range");
    if (k == cluster_count()) {
      ClusterCounts fresh;
      fresh.created_seq = next_seq_++;
      clusters_.push_back(std::move(fresh));
    }
    auto& cl = clusters_[static_cast<std::size_t>(k)];
    cl.eta += 1;
    total_obs_ += 1;
    bump_side(cl.out_links, cl.out_tables, e.src, beta_.at(e.src), rng);
    bump_side(cl.in_links, cl.in_tables, e.dst, beta_.at(e.dst), rng);
  }

  /// Removes one observation instance of (u, v) from cluster k. Returns
  /// the label of a retired (emptied) cluster, if any; labels above it
  /// shift down by one.
  std::optional<int> remove_observation(const DirectedEdge& e, int k) {
    if (k < 0 || k >= cluster_count())
      throw BookkeepingError("removing from unknown cluster");
    auto& cl = clusters_[static_cast<std::size_t>(k)];
    drop_side(cl.out_links, cl.out_tables, e.src);
    drop_side(cl.in_links, cl.in_tables, e.dst);
    cl.eta -= 1;
    total_obs_ -= 1;
    if (cl.eta == 0) {
      clusters_.erase(clusters_.begin() + k);
      return k;
    }
    return std::nullopt;
  }

  /// Gibbs refresh of every table count from the rho conditional; entries
  /// with l above the crossover use the exact CRP simulation instead of
  /// the Stirling table.
  void resample_tables(Engine& rng) {
    for (auto& cl : clusters_) {
      resample_side(cl.out_links, cl.out_tables, rng);
      resample_side(cl.in_links, cl.in_tables, rng);
    }
  }

  /// Dirichlet redraw of the node masses from the total table counts;
  /// nodes whose table count dropped to zero leave the support.
  void sample_node_masses(Engine& rng) {
    std::vector<NodeIndex> nodes;
    std::vector<double> conc;
    for (const auto& [u, b] : beta_) {
      const long r = total_tables(u);
      if (r > 0) {
        nodes.push_back(u);
        conc.push_back(static_cast<double>(r));
      }
    }
    conc.push_back(hyper_.gamma);
    const auto draw = sample_dirichlet(rng, conc);
    beta_.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) beta_[nodes[i]] = draw[i];
    beta_n_ = draw.back();
  }

  /// Total table count rho^(.) of a node over clusters and both sides.
  long total_tables(NodeIndex u) const {
    long r = 0;
    for (const auto& cl : clusters_)
      r += count_of(cl.out_tables, u) + count_of(cl.in_tables, u);
    return r;
  }

  /// Within-network predictive matrix over the node table; entries whose
  /// endpoint the model has never seen are 0 and the diagonal is forced 0.
  Eigen::MatrixXd predictive_matrix(const NodeTable& nodes,
                                    bool literal = false) const {
    const int n = nodes.size();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (!beta_.count(i)) continue;
      for (int j = 0; j < n; ++j) {
        if (i == j || !beta_.count(j)) continue;
        p(i, j) = predictive_edge(i, j, literal);
      }
    }
    return p;
  }

  /// Count conservation and beta normalization checks.
  void check_invariants() const {
    long eta_sum = 0;
    for (const auto& cl : clusters_) {
      if (cl.eta < 1) throw BookkeepingError("active cluster with eta < 1");
      eta_sum += cl.eta;
      check_side(cl.out_links, cl.out_tables, cl.eta);
      check_side(cl.in_links, cl.in_tables, cl.eta);
    }
    if (eta_sum != total_obs_)
      throw BookkeepingError("cluster sizes do not sum to M");
    double total = beta_n_;
    for (const auto& [u, b] : beta_) {
      if (!(b > 0.0)) throw BookkeepingError("non-positive beta mass");
      total += b;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw BookkeepingError("beta masses do not sum to 1");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["hyperparams"] = {{"alpha", hyper_.alpha},
                        {"tau", hyper_.tau},
                        {"gamma", hyper_.gamma}};
    j["total_observations"] = total_obs_;
    j["beta_remainder"] = beta_n_;
    nlohmann::json beta = nlohmann::json::object();
    for (const auto& [u, b] : beta_) beta[std::to_string(u)] = b;
    j["beta"] = std::move(beta);
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& cl : clusters_) {
      nlohmann::json c;
      c["eta"] = cl.eta;
      c["created_seq"] = cl.created_seq;
      c["out_links"] = counts_to_json(cl.out_links);
      c["in_links"] = counts_to_json(cl.in_links);
      c["out_tables"] = counts_to_json(cl.out_tables);
      c["in_tables"] = counts_to_json(cl.in_tables);
      clusters.push_back(std::move(c));
    }
    j["clusters"] = std::move(clusters);
    return j;
  }

  static MdndState from_json(const nlohmann::json& j) {
    Hyperparams h;
    h.alpha = j.at("hyperparams").at("alpha").get<double>();
    h.tau = j.at("hyperparams").at("tau").get<double>();
    h.gamma = j.at("hyperparams").at("gamma").get<double>();
    MdndState st(h);
    st.total_obs_ = j.at("total_observations").get<long>();
    st.beta_n_ = j.at("beta_remainder").get<double>();
    for (const auto& [key, val] : j.at("beta").items())
      st.beta_[std::stoi(key)] = val.get<double>();
    for (const auto& c : j.at("clusters")) {
      ClusterCounts cl;
      cl.eta = c.at("eta").get<long>();
      cl.created_seq = c.at("created_seq").get<long>();
      cl.out_links = counts_from_json(c.at("out_links"));
      cl.in_links = counts_from_json(c.at("in_links"));
      cl.out_tables = counts_from_json(c.at("out_tables"));
      cl.in_tables = counts_from_json(c.at("in_tables"));
      st.next_seq_ = std::max(st.next_seq_, cl.created_seq + 1);
      st.clusters_.push_back(std::move(cl));
    }
    st.check_invariants();
    return st;
  }

  /// Cluster summaries in canonical order (decreasing eta, creation-time
  /// tie-break), for order-insensitive state comparison.
  std::vector<ClusterCounts> canonical_clusters() const {
    auto sorted = clusters_;
    std::sort(sorted.begin(), sorted.end(),
              [](const ClusterCounts& a, const ClusterCounts& b) {
                return a.eta != b.eta ? a.eta > b.eta
                                      : a.created_seq < b.created_seq;
              });
    return sorted;
  }

  int stirling_crossover() const { return stirling_.n_max(); }
  const StirlingTable& stirling() const { return stirling_; }

 private:
  static long count_of(const std::map<NodeIndex, long>& m, NodeIndex u) {
    auto it = m.find(u);
    return it == m.end() ? 0 : it->second;
  }

  static nlohmann::json counts_to_json(const std::map<NodeIndex, long>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [u, c] : m) j[std::to_string(u)] = c;
    return j;
  }

  static std::map<NodeIndex, long> counts_from_json(const nlohmann::json& j) {
    std::map<NodeIndex, long> m;
    for (const auto& [key, val] : j.items()) m[std::stoi(key)] = val.get<long>();
    return m;
  }

  void bump_side(std::map<NodeIndex, long>& links,
                 std::map<NodeIndex, long>& tables, NodeIndex u, double beta_u,
                 Engine& rng) {
    const long l = count_of(links, u);
    links[u] = l + 1;
    if (l == 0) {
      tables[u] = 1;  // first customer opens the first table
      return;
    }
    const double tb = hyper_.tau * beta_u;
    if (uniform01(rng) < tb / (static_cast<double>(l) + tb)) tables[u] += 1;
  }

  void drop_side(std::map<NodeIndex, long>& links,
                 std::map<NodeIndex, long>& tables, NodeIndex u) {
    auto it = links.find(u);
    if (it == links.end() || it->second < 1)
      throw BookkeepingError("removing an absent observation");
    it->second -= 1;
    auto tt = tables.find(u);
    if (it->second == 0) {
      links.erase(it);
      if (tt != tables.end()) tables.erase(tt);
      return;
    }
    if (tt != tables.end() && tt->second > it->second) tt->second = it->second;
  }

  void resample_side(const std::map<NodeIndex, long>& links,
                     std::map<NodeIndex, long>& tables, Engine& rng) {
    for (const auto& [u, l] : links) {
      const double tb = hyper_.tau * beta_.at(u);
      if (l <= stirling_.n_max()) {
        const auto dist = rho_conditional(l, tb, stirling_);
        tables[u] = static_cast<long>(sample_categorical(rng, dist)) + 1;
      } else {
        tables[u] = simulate_crp_tables(l, tb, rng);
      }
    }
  }

  void check_side(const std::map<NodeIndex, long>& links,
                  const std::map<NodeIndex, long>& tables, long eta) const {
    long l_sum = 0;
    for (const auto& [u, l] : links) {
      if (l < 1) throw BookkeepingError("stored zero link count");
      l_sum += l;
      const long r = count_of(tables, u);
      if (r < 1 || r > l) throw BookkeepingError("table count out of range");
      if (!beta_.count(u)) throw BookkeepingError("counts on unknown node");
    }
    if (l_sum != eta) throw BookkeepingError("link counts do not sum to eta");
    for (const auto& [u, r] : tables)
      if (count_of(links, u) == 0 && r != 0)
        throw BookkeepingError("tables without links");
  }

  Hyperparams hyper_;
  std::vector<ClusterCounts> clusters_;
  std::map<NodeIndex, double> beta_;
  double beta_n_ = 1.0;
  long total_obs_ = 0;
  long next_seq_ = 0;
  StirlingTable stirling_;
};

/// Predictive matrix wrapper carrying the window tag.
inline EdgeProbabilitySnapshot edge_probability_matrix(const MdndState& st,
                                                       const NodeTable& nodes,
                                                       double window_start = 0,
                                                       bool literal = false) {
  return {window_start, st.predictive_matrix(nodes, literal)};
}

}  // namespace dynet
