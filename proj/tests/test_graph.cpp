#include "dynet/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dynet/errors.hpp"
#include "dynet/rng.hpp"

using namespace dynet;

namespace {

Cascade make_cascade(std::vector<Infection> inf) {
  return Cascade("c", std::move(inf));
}

NodeTable table_of(int n) {
  NodeTable t;
  for (int i = 0; i < n; ++i) t.add("n" + std::to_string(i));
  return t;
}

}  // namespace

TEST(NodeTable, DenseIndicesAndUniqueLabels) {
  NodeTable t;
  EXPECT_EQ(t.add("a"), 0);
  EXPECT_EQ(t.add("b"), 1);
  EXPECT_EQ(t.intern("a"), 0);
  EXPECT_EQ(t.intern("c"), 2);
  EXPECT_THROW(t.add("a"), std::invalid_argument);
  EXPECT_EQ(t.label(1), "b");
  EXPECT_FALSE(t.find("zz").has_value());
}

TEST(Cascade, RejectsBadTimes) {
  EXPECT_THROW(make_cascade({{0, -1.0}}), std::invalid_argument);
  EXPECT_THROW(make_cascade({{0, std::nan("")}}), std::invalid_argument);
  EXPECT_THROW(make_cascade({{0, 1.0}, {0, 2.0}}), std::invalid_argument);
}

TEST(CandidateEdges, StrictOrdering) {
  const auto cand = candidate_edges(make_cascade({{0, 0.0}, {1, 1.0}, {2, 2.0}}));
  const std::vector<DirectedEdge> want = {{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(cand.edges, want);
  const std::vector<NodeIndex> nodes = {0, 1, 2};
  EXPECT_EQ(cand.nodes, nodes);
}

TEST(CandidateEdges, TiesProduceNoEdge) {
  const auto cand = candidate_edges(make_cascade({{0, 0.0}, {1, 0.0}}));
  EXPECT_TRUE(cand.edges.empty());
  EXPECT_EQ(cand.nodes.size(), 2u);
}

TEST(CandidateEdges, UninfectedNeverParticipates) {
  // node 2 is absent (= infinite time)
  const auto cand = candidate_edges(make_cascade({{0, 0.0}, {1, 1.0}}));
  const std::vector<DirectedEdge> want = {{0, 1}};
  EXPECT_EQ(cand.edges, want);
  EXPECT_EQ(cand.nodes.size(), 2u);
}

TEST(CandidateEdges, CountMatchesBruteForceOnRandomCascades) {
  Engine rng = make_engine(42, "candidate-prop");
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(uniform_below(rng, 7));
    std::vector<Infection> inf;
    for (int u = 0; u < n; ++u) {
      if (uniform01(rng) < 0.2) continue;  // uninfected
      // coarse grid forces occasional ties
      inf.push_back({u, std::floor(uniform01(rng) * 4.0)});
    }
    const Cascade c("t", inf);
    std::size_t expected = 0;
    for (const auto& a : inf)
      for (const auto& b : inf)
        if (a.time < b.time) ++expected;
    EXPECT_EQ(candidate_edges(c).edges.size(), expected);
    EXPECT_EQ(candidate_edges(c).nodes.size(), inf.size());
  }
}

TEST(WindowSlice, HalfOpenInterval) {
  CascadeSet cs({make_cascade({{0, 0.5}, {1, 1.5}, {2, 2.5}})}, table_of(3));
  const auto sliced = window_slice(cs, 1.0, 1.0);
  ASSERT_EQ(sliced.size(), 1u);
  ASSERT_EQ(sliced.cascades()[0].size(), 1u);
  EXPECT_EQ(sliced.cascades()[0].infections()[0].node, 1);
  EXPECT_DOUBLE_EQ(sliced.cascades()[0].infections()[0].time, 1.5);
}

TEST(WindowSlice, EmptySliceDropsCascade) {
  CascadeSet cs({make_cascade({{0, 0.5}})}, table_of(1));
  EXPECT_TRUE(window_slice(cs, 1.0, 1.0).empty());
}

TEST(WindowSlice, CascadesFilteredIndependently) {
  CascadeSet cs({Cascade("a", {{0, 0.2}, {1, 1.2}}),
                 Cascade("b", {{0, 1.1}, {1, 1.9}})},
                table_of(2));
  const auto sliced = window_slice(cs, 1.0, 1.0);
  ASSERT_EQ(sliced.size(), 2u);
  EXPECT_EQ(sliced.cascades()[0].size(), 1u);  // only the 1.2 infection
  EXPECT_EQ(sliced.cascades()[1].size(), 2u);  // fully inside
}

TEST(WindowSlice, RejectsNonPositiveWidth) {
  CascadeSet cs({make_cascade({{0, 0.0}})}, table_of(1));
  EXPECT_THROW(window_slice(cs, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(window_slice(cs, 0.0, -1.0), std::invalid_argument);
}

TEST(WindowSlice, FullWindowIsIdentity) {
  Engine rng = make_engine(7, "slice-prop");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Cascade> cascades;
    for (int c = 0; c < 5; ++c) {
      std::vector<Infection> inf;
      for (int u = 0; u < 6; ++u)
        if (uniform01(rng) < 0.7) inf.push_back({u, uniform01(rng) * 9.0});
      cascades.emplace_back("c" + std::to_string(c), std::move(inf));
    }
    CascadeSet cs(cascades, table_of(6));
    const auto full = window_slice(cs, 0.0, cs.max_time() + 1.0);
    std::size_t total = 0, total_full = 0;
    for (const auto& c : cs.cascades()) total += c.size();
    for (const auto& c : full.cascades()) total_full += c.size();
    EXPECT_EQ(total, total_full);
  }
}

TEST(InitialWeights, SingleEdgeNormalizesToOne) {
  CascadeSet cs({make_cascade({{0, 0.0}, {1, 2.0}})}, table_of(2));
  const auto d = initial_weights(cs);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.at({0, 1}), 1.0);
}

TEST(InitialWeights, AccumulatesAcrossCascades) {
  CascadeSet cs({Cascade("a", {{0, 0.0}, {1, 1.0}}),
                 Cascade("b", {{0, 0.0}, {1, 3.0}})},
                table_of(2));
  const auto d = initial_weights(cs);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.at({0, 1}), 1.0);  // raw 4, sole edge
}

TEST(InitialWeights, HandAccumulatedExample) {
  CascadeSet cs({make_cascade({{0, 0.0}, {1, 1.0}, {2, 3.0}})}, table_of(3));
  const auto d = initial_weights(cs);
  // raw sums 1, 3, 2; mean 2
  EXPECT_DOUBLE_EQ(d.at({0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(d.at({0, 2}), 1.5);
  EXPECT_DOUBLE_EQ(d.at({1, 2}), 1.0);
}

TEST(InitialWeights, EmptyInputError) {
  CascadeSet cs({make_cascade({{0, 0.0}, {1, 0.0}})}, table_of(2));
  EXPECT_THROW(initial_weights(cs), EmptyInputError);
}

TEST(InitialWeights, PositiveAndMeanOne) {
  Engine rng = make_engine(13, "weights-prop");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Cascade> cascades;
    for (int c = 0; c < 4; ++c) {
      std::vector<Infection> inf;
      for (int u = 0; u < 5; ++u)
        if (uniform01(rng) < 0.8) inf.push_back({u, uniform01(rng) * 5.0});
      cascades.emplace_back("c" + std::to_string(c), std::move(inf));
    }
    CascadeSet cs(cascades, table_of(5));
    WeightMap d;
    try {
      d = initial_weights(cs);
    } catch (const EmptyInputError&) {
      continue;
    }
    double mean = 0.0;
    for (const auto& [e, w] : d) {
      EXPECT_GT(w, 0.0);
      mean += w;
    }
    mean /= static_cast<double>(d.size());
    EXPECT_NEAR(mean, 1.0, 1e-12);
  }
}

TEST(GroundTruthNetwork, StaticAndDynamicAccess) {
  GroundTruthNetwork net;
  net.node_count = 3;
  net.is_static = true;
  net.snapshots[0] = {{{0, 1}, 1.0}};
  EXPECT_EQ(net.at_step(5).size(), 1u);  // static: any step maps to 0
  net.is_static = false;
  EXPECT_THROW(net.at_step(5), std::out_of_range);
}
