#include "dynet/evalkit.hpp"

#include <gtest/gtest.h>

#include "dynet/rng.hpp"

using namespace dynet;

namespace {

EdgeProbabilitySnapshot three_edge_snapshot() {
  EdgeProbabilitySnapshot s;
  s.window_start = 0.0;
  s.probs = Eigen::MatrixXd::Zero(3, 3);
  s.probs(0, 1) = 0.9;
  s.probs(0, 2) = 0.5;
  s.probs(1, 2) = 0.1;
  return s;
}

}  // namespace

TEST(PrecisionRecallF1, ExactMatch) {
  const EdgeSet truth = {{0, 1}, {1, 2}};
  const auto m = precision_recall_f1(truth, truth);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(PrecisionRecallF1, Disjoint) {
  const auto m = precision_recall_f1({{0, 1}}, {{1, 0}});
  EXPECT_DOUBLE_EQ(m.precision, 0.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(PrecisionRecallF1, HalfOverlap) {
  const EdgeSet pred = {{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  const EdgeSet truth = {{0, 1}, {0, 2}, {1, 3}, {1, 4}};
  const auto m = precision_recall_f1(pred, truth);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
}

TEST(PrecisionRecallF1, EmptyPredictionDefinedAsZero) {
  const auto m = precision_recall_f1({}, {{0, 1}});
  EXPECT_DOUBLE_EQ(m.precision, 0.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(PrecisionRecallF1, F1SymmetricUnderSwap) {
  Engine rng = make_engine(1, "prf-prop");
  for (int trial = 0; trial < 50; ++trial) {
    EdgeSet a, b;
    for (int i = 0; i < 12; ++i) {
      const DirectedEdge e = {static_cast<int>(uniform_below(rng, 5)),
                              static_cast<int>(uniform_below(rng, 5)) + 5};
      if (uniform01(rng) < 0.5) a.insert(e);
      if (uniform01(rng) < 0.5) b.insert(e);
    }
    EXPECT_DOUBLE_EQ(precision_recall_f1(a, b).f1,
                     precision_recall_f1(b, a).f1);
  }
}

TEST(Binarize, TopMTakesHighest) {
  const auto snap = three_edge_snapshot();
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kTopM;
  mode.m = 2;
  const EdgeSet want = {{0, 1}, {0, 2}};
  EXPECT_EQ(binarize(snap, mode), want);
}

TEST(Binarize, TopMWithoutTruthOrMThrows) {
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kTopM;
  EXPECT_THROW(binarize(three_edge_snapshot(), mode), InvalidConfigError);
  const EdgeSet truth = {{0, 1}};
  EXPECT_EQ(binarize(three_edge_snapshot(), mode, &truth).size(), 1u);
}

TEST(Binarize, TopMReturnsAtMostNonzeroEntries) {
  const auto snap = three_edge_snapshot();
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kTopM;
  mode.m = 50;
  EXPECT_EQ(binarize(snap, mode).size(), 3u);  // only 3 nonzero entries
}

TEST(Binarize, ThresholdOneIsEmpty) {
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kThreshold;
  mode.threshold = 1.0;
  EXPECT_TRUE(binarize(three_edge_snapshot(), mode).empty());
}

TEST(Binarize, BestF1SweepFindsTopEdge) {
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kBestF1;
  const EdgeSet truth = {{0, 1}};
  const auto got = binarize(three_edge_snapshot(), mode, &truth);
  EXPECT_EQ(got, truth);  // threshold lands just above the second edge
}

TEST(Binarize, DeterministicTieBreak) {
  EdgeProbabilitySnapshot s;
  s.probs = Eigen::MatrixXd::Zero(3, 3);
  s.probs(0, 1) = 0.5;
  s.probs(0, 2) = 0.5;
  s.probs(1, 2) = 0.5;
  BinarizeMode mode;
  mode.kind = BinarizeMode::Kind::kTopM;
  mode.m = 2;
  const EdgeSet want = {{0, 1}, {0, 2}};  // (src, dst) order on ties
  EXPECT_EQ(binarize(s, mode), want);
}

TEST(RankNextInfections, OrdersByProbability) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  p(0, 1) = 0.1;
  p(0, 2) = 0.9;
  const auto ranking = rank_next_infections(p, {0});
  ASSERT_EQ(ranking.size(), 2u);
  EXPECT_EQ(ranking[0], 2);
  EXPECT_EQ(ranking[1], 1);
}

TEST(RankNextInfections, UnreachableRankedLast) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
  p(0, 1) = 0.3;
  p(0, 2) = 0.2;
  // node 3 unreachable: all-zero column
  const auto ranking = rank_next_infections(p, {0});
  EXPECT_EQ(ranking.back(), 3);
}

TEST(RankNextInfections, NoisyOrBeatsSingleStrongSource) {
  // v=2 sees two 0.5 sources (noisy-or 0.75); w=3 sees one 0.7 source
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
  p(0, 2) = 0.5;
  p(1, 2) = 0.5;
  p(0, 3) = 0.7;
  const auto noisy = rank_next_infections(p, {0, 1}, RankScore::kNoisyOr);
  EXPECT_EQ(noisy.front(), 2);
  const auto max_src = rank_next_infections(p, {0, 1}, RankScore::kMaxSource);
  EXPECT_EQ(max_src.front(), 3);
}

TEST(RankNextInfections, EmptyPrefixThrows) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(rank_next_infections(p, {}), std::invalid_argument);
}

TEST(MapHitsAtK, PerfectRanking) {
  std::vector<RankingEvent> events(5);
  for (auto& ev : events) {
    ev.ranking = {3, 1, 2};
    ev.realized = {3};
  }
  const auto m = map_hits_at_k(events, {1, 5, 10});
  for (int k : {1, 5, 10}) {
    EXPECT_DOUBLE_EQ(m.hits_at_k.at(k), 1.0);
    EXPECT_DOUBLE_EQ(m.map_at_k.at(k), 1.0);
  }
}

TEST(MapHitsAtK, NextNodeBeyondKScoresZero) {
  std::vector<RankingEvent> events(3);
  for (auto& ev : events) {
    ev.ranking = {0, 1, 2, 3, 4};
    ev.realized = {4};  // rank 5
  }
  const auto m = map_hits_at_k(events, {4});
  EXPECT_DOUBLE_EQ(m.hits_at_k.at(4), 0.0);
  EXPECT_DOUBLE_EQ(m.map_at_k.at(4), 0.0);
}

TEST(MapHitsAtK, AveragePrecisionArithmetic) {
  // two events, next node at ranks 1 and 2 -> MAP@10 = (1 + 0.5) / 2
  std::vector<RankingEvent> events(2);
  events[0].ranking = {7, 8, 9};
  events[0].realized = {7};
  events[1].ranking = {8, 7, 9};
  events[1].realized = {7};
  const auto m = map_hits_at_k(events, {10});
  EXPECT_DOUBLE_EQ(m.map_at_k.at(10), 0.75);
  EXPECT_DOUBLE_EQ(m.hits_at_k.at(10), 1.0);
}

TEST(MapHitsAtK, RejectsNonPositiveK) {
  EXPECT_THROW(map_hits_at_k({}, {0}), std::invalid_argument);
  EXPECT_THROW(map_hits_at_k({}, {-3}), std::invalid_argument);
}

TEST(MapHitsAtK, HitsMonotoneInK) {
  Engine rng = make_engine(2, "hits-prop");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RankingEvent> events;
    for (int e = 0; e < 10; ++e) {
      RankingEvent ev;
      for (int v = 0; v < 8; ++v) ev.ranking.push_back(v);
      std::shuffle(ev.ranking.begin(), ev.ranking.end(), rng);
      ev.realized = {static_cast<int>(uniform_below(rng, 8))};
      events.push_back(std::move(ev));
    }
    const auto m = map_hits_at_k(events, {1, 2, 4, 8});
    EXPECT_LE(m.hits_at_k.at(1), m.hits_at_k.at(2));
    EXPECT_LE(m.hits_at_k.at(2), m.hits_at_k.at(4));
    EXPECT_LE(m.hits_at_k.at(4), m.hits_at_k.at(8));
    EXPECT_DOUBLE_EQ(m.hits_at_k.at(8), 1.0);
  }
}

TEST(PredictionEvents, OnePerPrefixLength) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 4, 0.1);
  const Cascade c("c", {{0, 0.0}, {1, 1.0}, {2, 2.0}, {3, 3.0}});
  const auto events = prediction_events(p, c);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0].realized, std::vector<NodeIndex>{1});
  EXPECT_EQ(events[2].realized, std::vector<NodeIndex>{3});
  EXPECT_EQ(events[0].ranking.size(), 3u);
}

TEST(PredictionEvents, SimultaneousInfectionsGrouped) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 4, 0.1);
  const Cascade c("c", {{0, 0.0}, {1, 1.0}, {2, 1.0}, {3, 2.0}});
  const auto events = prediction_events(p, c);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].realized.size(), 2u);  // nodes 1 and 2 together
  EXPECT_EQ(events[1].realized, std::vector<NodeIndex>{3});
}

TEST(MetricsCsv, LongFormat) {
  const std::vector<MetricsRow> rows = {{0.0, "f1", 0, 0.5},
                                        {1.0, "hits", 10, 0.25}};
  EXPECT_EQ(metrics_to_csv(rows),
            "window_start,metric,k,value\n0,f1,0,0.5\n1,hits,10,0.25\n");
}
