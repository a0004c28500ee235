#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dynet/errors.hpp"
#include "dynet/graph.hpp"
#include "dynet/rng.hpp"

namespace dynet {

// e^{-d/lambda} is floored here so the grounded Laplacian stays
// numerically positive definite even for very heavy edges.
inline constexpr double kMinEdgeWeight = 1e-12;

/// Gibbs-measure distribution over a cascade's diffusion trees:
/// p(T) proportional to exp(-sum_{e in T} d_e / lambda) over spanning
/// trees of the candidate graph. The candidate graph is treated as
/// undirected for the tree measure; directions are carried along from the
/// infection-time order.
struct TreeDistribution {
  std::vector<NodeIndex> nodes;      // V_c, earliest infected first
  std::vector<DirectedEdge> edges;   // E_c
  std::vector<double> weights;       // d, aligned with edges
  double lambda = 1.0;
  NodeIndex root = 0;                // grounded vertex

  static TreeDistribution from_cascade(const Cascade& c, const WeightMap& d,
                                       double lambda) {
    if (!(lambda > 0.0))
      throw std::invalid_argument("lambda must be positive");
    auto cand = candidate_edges(c);
    TreeDistribution td;
    td.nodes = std::move(cand.nodes);
    td.edges = std::move(cand.edges);
    td.lambda = lambda;
    td.root = td.nodes.empty() ? 0 : td.nodes.front();
    td.weights.reserve(td.edges.size());
    for (const auto& e : td.edges) {
      auto it = d.find(e);
      if (it == d.end())
        throw std::invalid_argument("weight map does not cover candidate edge");
      td.weights.push_back(it->second);
    }
    return td;
  }

  std::size_t edge_count() const { return edges.size(); }
  std::size_t node_count() const { return nodes.size(); }

  double edge_factor(std::size_t e) const {
    return std::max(std::exp(-weights[e] / lambda), kMinEdgeWeight);
  }
};

struct DppKernel {
  Eigen::MatrixXd incidence;  // (|V_c|-1) x |E_c|, root row removed
  Eigen::MatrixXd laplacian;  // A diag(e^{-d/lambda}) A^T
  Eigen::MatrixXd kernel;     // H^T H with H = L^{-1/2} A diag(e^{-d/2lambda})
  std::vector<DirectedEdge> edges;

  std::vector<double> diagonal() const {
    std::vector<double> out(edges.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = kernel(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(i));
    return out;
  }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

inline std::map<NodeIndex, std::size_t> node_positions(
    const TreeDistribution& td) {
  std::map<NodeIndex, std::size_t> pos;
  for (std::size_t i = 0; i < td.nodes.size(); ++i) pos[td.nodes[i]] = i;
  return pos;
}

/// Throws GraphDisconnectedError when the undirected support is not
/// connected over V_c.
inline void check_connected(const TreeDistribution& td) {
  const auto pos = node_positions(td);
  UnionFind uf(td.nodes.size());
  for (const auto& e : td.edges) uf.unite(pos.at(e.src), pos.at(e.dst));
  std::map<std::size_t, std::vector<int>> comps;
  for (std::size_t i = 0; i < td.nodes.size(); ++i)
    comps[uf.find(i)].push_back(td.nodes[i]);
  if (comps.size() > 1) {
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : comps) out.push_back(std::move(members));
    throw GraphDisconnectedError("candidate support graph is disconnected",
                                 std::move(out));
  }
}

/// Signed incidence over V_c \ {root} (row per non-root node, column per
/// edge): +1 at the source, -1 at the destination.
inline Eigen::MatrixXd grounded_incidence(const TreeDistribution& td) {
  const auto pos = node_positions(td);
  std::map<NodeIndex, Eigen::Index> row;
  Eigen::Index r = 0;
  for (const auto& u : td.nodes)
    if (u != td.root) row[u] = r++;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(td.nodes.size()) - 1,
      static_cast<Eigen::Index>(td.edges.size()));
  for (std::size_t e = 0; e < td.edges.size(); ++e) {
    const auto& edge = td.edges[e];
    if (edge.src != td.root) A(row.at(edge.src), e) = 1.0;
    if (edge.dst != td.root) A(row.at(edge.dst), e) = -1.0;
  }
  return A;
}

inline Eigen::MatrixXd grounded_laplacian(const TreeDistribution& td,
                                          const Eigen::MatrixXd& A) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(td.edges.size()));
  for (std::size_t e = 0; e < td.edges.size(); ++e)
    w(static_cast<Eigen::Index>(e)) = td.edge_factor(e);
  return A * w.asDiagonal() * A.transpose();
}

}  // namespace detail

/// Exact edge marginals p(e in T): e^{-d_e/lambda} (a_u - a_v)^T L^{-1}
/// (a_u - a_v), the root's indicator coordinate treated as 0. Each value
/// lies in [0,1] and they sum to |V_c| - 1.
inline std::map<DirectedEdge, double> edge_marginals(
    const TreeDistribution& td) {
  detail::check_connected(td);
  const Eigen::MatrixXd A = detail::grounded_incidence(td);
  const Eigen::MatrixXd L = detail::grounded_laplacian(td, A);
  const Eigen::LLT<Eigen::MatrixXd> llt(L);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("grounded Laplacian not positive definite");
  const Eigen::MatrixXd X = llt.solve(A);  // L^{-1} (a_u - a_v) per column
  std::map<DirectedEdge, double> out;
  for (std::size_t e = 0; e < td.edges.size(); ++e) {
    const auto col = static_cast<Eigen::Index>(e);
    const double val = td.edge_factor(e) * A.col(col).dot(X.col(col));
    out[td.edges[e]] = std::clamp(val, 0.0, 1.0);
  }
  return out;
}

/// DPP kernel K = H^T H, H = L^{-1/2} A diag(e^{-d/2lambda}). K is a
/// projection (K^2 = K) with trace |V_c| - 1 and diag(K) equal to the
/// closed-form marginals.
inline DppKernel build_kernel(const TreeDistribution& td) {
  detail::check_connected(td);
  DppKernel k;
  k.edges = td.edges;
  k.incidence = detail::grounded_incidence(td);
  k.laplacian = detail::grounded_laplacian(td, k.incidence);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.laplacian);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Laplacian eigendecomposition failed");
  const Eigen::MatrixXd inv_sqrt =
      es.eigenvectors() *
      es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::VectorXd half_w(static_cast<Eigen::Index>(td.edges.size()));
  for (std::size_t e = 0; e < td.edges.size(); ++e)
    half_w(static_cast<Eigen::Index>(e)) = std::sqrt(td.edge_factor(e));
  const Eigen::MatrixXd H = inv_sqrt * k.incidence * half_w.asDiagonal();
  k.kernel = H.transpose() * H;
  return k;
}

/// log p(t | d/lambda) for a spanning tree t of the support graph.
inline double tree_log_probability(const std::vector<DirectedEdge>& t,
                                   const TreeDistribution& td) {
  detail::check_connected(td);
  if (t.size() + 1 != td.node_count())
    throw std::invalid_argument("edge set is not a spanning tree");
  const auto pos = detail::node_positions(td);
  std::map<DirectedEdge, std::size_t> index;
  for (std::size_t e = 0; e < td.edges.size(); ++e) index[td.edges[e]] = e;
  detail::UnionFind uf(td.node_count());
  double energy = 0.0;
  for (const auto& e : t) {
    auto it = index.find(e);
    if (it == index.end())
      throw std::invalid_argument("tree edge not in candidate set");
    if (!uf.unite(pos.at(e.src), pos.at(e.dst)))
      throw std::invalid_argument("edge set contains a cycle");
    energy += std::log(td.edge_factor(it->second));
  }
  // log Z via the weighted matrix-tree theorem: Z = det of the grounded
  // Laplacian, read off the Cholesky factor.
  const Eigen::MatrixXd A = detail::grounded_incidence(td);
  const Eigen::MatrixXd L = detail::grounded_laplacian(td, A);
  const Eigen::LLT<Eigen::MatrixXd> llt(L);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("grounded Laplacian not positive definite");
  double log_z = 0.0;
  const auto& chol = llt.matrixLLT();
  for (Eigen::Index i = 0; i < chol.rows(); ++i)
    log_z += 2.0 * std::log(chol(i, i));
  return energy - log_z;
}

/// P(r subset of T) = det K_r.
inline double subset_probability(const std::vector<DirectedEdge>& r,
                                 const DppKernel& k) {
  if (r.empty()) return 1.0;
  std::map<DirectedEdge, Eigen::Index> index;
  for (std::size_t e = 0; e < k.edges.size(); ++e)
    index[k.edges[e]] = static_cast<Eigen::Index>(e);
  Eigen::MatrixXd minor(static_cast<Eigen::Index>(r.size()),
                        static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto it = index.find(r[i]);
    if (it == index.end())
      throw std::invalid_argument("subset edge not in candidate set");
    for (std::size_t j = 0; j < r.size(); ++j)
      minor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k.kernel(it->second, index.at(r[j]));
  }
  return std::clamp(minor.determinant(), 0.0, 1.0);
}

/// min(q, |E_c|) distinct edges drawn without replacement with selection
/// weights proportional to the edge marginals.
inline std::vector<DirectedEdge> sample_observation_edges(
    const TreeDistribution& td, std::size_t q, Engine& rng) {
  if (q == 0) throw std::invalid_argument("sample size q must be >= 1");
  if (q >= td.edge_count()) return td.edges;
  const auto marg = edge_marginals(td);
  std::vector<double> w(td.edge_count());
  for (std::size_t e = 0; e < td.edge_count(); ++e) w[e] = marg.at(td.edges[e]);
  std::vector<DirectedEdge> out;
  out.reserve(q);
  std::vector<std::size_t> alive(td.edge_count());
  std::iota(alive.begin(), alive.end(), 0);
  for (std::size_t draw = 0; draw < q; ++draw) {
    std::vector<double> cur(alive.size());
    for (std::size_t i = 0; i < alive.size(); ++i) cur[i] = w[alive[i]];
    const std::size_t pick = sample_categorical(rng, cur);
    out.push_back(td.edges[alive[pick]]);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

/// Exact draw from the spanning-tree DPP via the standard projection
/// sampler on the eigenvectors of K; always returns |V_c| - 1 edges.
inline std::vector<DirectedEdge> sample_dpp_edges(const TreeDistribution& td,
                                                  Engine& rng) {
  const DppKernel k = build_kernel(td);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.kernel);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("kernel eigendecomposition failed");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
  Eigen::MatrixXd V(k.kernel.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    V.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);

  std::vector<DirectedEdge> out;
  while (V.cols() > 0) {
    std::vector<double> w(static_cast<std::size_t>(V.rows()));
    for (Eigen::Index i = 0; i < V.rows(); ++i)
      w[static_cast<std::size_t>(i)] = V.row(i).squaredNorm();
    const auto item =
        static_cast<Eigen::Index>(sample_categorical(rng, w));
    out.push_back(k.edges[static_cast<std::size_t>(item)]);
    // project the span onto the subspace vanishing at the chosen item
    Eigen::Index pivot = 0;
    V.row(item).cwiseAbs().maxCoeff(&pivot);
    const Eigen::VectorXd pcol = V.col(pivot);
    const double pval = pcol(item);
    for (Eigen::Index j = 0; j < V.cols(); ++j)
      if (j != pivot) V.col(j) -= (V(item, j) / pval) * pcol;
    // drop the pivot column and re-orthonormalize (Gram-Schmidt)
    Eigen::MatrixXd W(V.rows(), V.cols() - 1);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < V.cols(); ++j)
      if (j != pivot) W.col(c++) = V.col(j);
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      for (Eigen::Index prev = 0; prev < j; ++prev)
        W.col(j) -= W.col(prev).dot(W.col(j)) * W.col(prev);
      const double norm = W.col(j).norm();
      if (norm > 1e-12) W.col(j) /= norm;
    }
    V = std::move(W);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Greedy most-probable directed tree: each non-root infected node takes
/// the highest-probability candidate parent, ties to the lowest source
/// index.
inline std::vector<DirectedEdge> map_tree(
    const Cascade& c, const std::map<DirectedEdge, double>& edge_prob) {
  const auto& inf = c.infections();
  std::vector<DirectedEdge> out;
  if (inf.empty()) return out;
  const double t_root = inf.front().time;
  for (std::size_t j = 0; j < inf.size(); ++j) {
    if (inf[j].time == t_root) continue;  // roots have no parent
    NodeIndex best = -1;
    double best_p = 0.0;
    for (std::size_t i = 0; i < inf.size(); ++i) {
      if (!(inf[i].time < inf[j].time)) continue;
      auto it = edge_prob.find({inf[i].node, inf[j].node});
      const double p = it == edge_prob.end() ? 0.0 : it->second;
      if (p <= 0.0) continue;
      if (p > best_p || (p == best_p && inf[i].node < best)) {
        best_p = p;
        best = inf[i].node;
      }
    }
    if (best < 0)
      throw OrphanNodeError("node " + std::to_string(inf[j].node) +
                                " has no candidate parent of positive "
                                "probability",
                            inf[j].node);
    out.push_back({best, inf[j].node});
  }
  return out;
}

/// All spanning trees with normalized Gibbs probabilities. Enumeration
/// helper shared by the oracle-side tests; |V_c| <= 8.
inline std::vector<std::pair<std::vector<DirectedEdge>, double>>
enumerate_spanning_trees(const TreeDistribution& td) {
  if (td.node_count() > 8)
    throw SizeLimitError("brute-force enumeration limited to 8 nodes");
  const auto pos = detail::node_positions(td);
  const std::size_t n = td.node_count();
  const std::size_t m = td.edge_count();
  std::vector<std::pair<std::vector<DirectedEdge>, double>> trees;
  if (n <= 1 || m < n - 1) return trees;
  std::vector<std::size_t> chosen(n - 1);
  std::iota(chosen.begin(), chosen.end(), 0);
  double total = 0.0;
  for (;;) {
    detail::UnionFind uf(n);
    std::size_t merges = 0;
    for (std::size_t e : chosen)
      if (uf.unite(pos.at(td.edges[e].src), pos.at(td.edges[e].dst))) ++merges;
    if (merges == n - 1) {
      double w = 1.0;
      std::vector<DirectedEdge> t;
      for (std::size_t e : chosen) {
        w *= td.edge_factor(e);
        t.push_back(td.edges[e]);
      }
      trees.emplace_back(std::move(t), w);
      total += w;
    }
    std::size_t i = n - 1;
    while (chosen[i - 1] == m - 1 - ((n - 1) - i)) {
      if (i == 1) {
        for (auto& [t, w] : trees) w /= total;
        return trees;
      }
      --i;
    }
    ++chosen[i - 1];
    for (std::size_t j = i; j < n - 1; ++j) chosen[j] = chosen[j - 1] + 1;
  }
}

/// Exact marginals by enumerating every spanning tree with its Gibbs
/// weight. Independent oracle for edge_marginals; |V_c| <= 8 only.
inline std::map<DirectedEdge, double> brute_force_marginals(
    const TreeDistribution& td) {
  detail::check_connected(td);
  std::map<DirectedEdge, double> acc;
  for (const auto& e : td.edges) acc[e] = 0.0;
  if (td.node_count() <= 1) return acc;
  const auto trees = enumerate_spanning_trees(td);
  if (trees.empty()) throw std::runtime_error("no spanning tree in support");
  for (const auto& [t, p] : trees)
    for (const auto& e : t) acc[e] += p;
  return acc;
}

}  // namespace dynet
