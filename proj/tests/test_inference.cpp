#include "dynet/inference.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dynet/errors.hpp"
#include "dynet/io.hpp"
#include "dynet/rng.hpp"

using namespace dynet;

namespace {

NodeTable table_of(int n) {
  NodeTable t;
  for (int i = 0; i < n; ++i) t.add("n" + std::to_string(i));
  return t;
}

InferenceConfig small_config() {
  InferenceConfig cfg;
  cfg.outer_iters = 2;
  cfg.sweeps = 30;
  cfg.burnin = 10;
  cfg.thin = 2;
  cfg.seed = 1234;
  return cfg;
}

}  // namespace

TEST(InitModel, EmptyCollapsedState) {
  const auto st = init_model(InferenceConfig{});
  EXPECT_EQ(st.cluster_count(), 0);
  EXPECT_EQ(st.total_observations(), 0);
  EXPECT_EQ(st.known_nodes(), 0);
  EXPECT_DOUBLE_EQ(st.beta_remainder(), 1.0);
  EXPECT_DOUBLE_EQ(st.predictive_edge(std::nullopt, std::nullopt), 1.0);
}

TEST(InitModel, CheckpointRoundTrip) {
  const auto st = init_model(InferenceConfig{});
  Engine gibbs = make_gibbs_engine(7, 0);
  const auto ckpt = make_checkpoint(st, gibbs, table_of(3));
  auto loaded = load_checkpoint(ckpt);
  EXPECT_EQ(make_checkpoint(loaded.model, loaded.gibbs, loaded.nodes).dump(2),
            ckpt.dump(2));
}

TEST(ExtractObservations, SingleCandidate) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 1.0}})}, table_of(2));
  const auto d = initial_weights(cs);
  const auto x = extract_observations(cs, d, small_config(), 1, 0);
  ASSERT_EQ(x.instances.size(), 1u);
  EXPECT_EQ(x.instances[0].edge, (DirectedEdge{0, 1}));
  const auto entries = x.entries(cs);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].multiplicity, 1);
}

TEST(ExtractObservations, CrossCascadeMultiplicity) {
  CascadeSet cs({Cascade("a", {{0, 0.0}, {1, 1.0}}),
                 Cascade("b", {{0, 0.0}, {1, 2.0}})},
                table_of(2));
  const auto x =
      extract_observations(cs, initial_weights(cs), small_config(), 1, 0);
  const auto entries = x.entries(cs);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].multiplicity, 2);
  EXPECT_EQ(entries[0].cascade_ids.size(), 2u);
}

TEST(ExtractObservations, ExhaustiveSampleSize) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 1.0}, {2, 2.0}})}, table_of(3));
  auto cfg = small_config();
  cfg.q = {SampleSizeRule::Kind::kFixed, 3, 0.0};
  const auto x = extract_observations(cs, initial_weights(cs), cfg, 1, 0);
  EXPECT_EQ(x.instances.size(), 3u);  // q = |E_c| takes all candidates
}

TEST(ExtractObservations, SkipsCascadesWithoutCandidates) {
  CascadeSet cs({Cascade("tied", {{0, 1.0}, {1, 1.0}}),
                 Cascade("single", {{0, 0.5}}),
                 Cascade("ok", {{0, 0.0}, {1, 1.0}})},
                table_of(2));
  WeightMap d = {{{0, 1}, 1.0}};
  const auto x = extract_observations(cs, d, small_config(), 1, 0);
  EXPECT_EQ(x.skipped_cascades, 2u);
  EXPECT_EQ(x.instances.size(), 1u);
}

TEST(ExtractObservations, DefaultSampleSizeIsCandidatesMinusOne) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 1.0}, {2, 2.0}, {3, 3.0}})},
                table_of(4));
  // |E_c| = 6 -> q = 5
  const auto x =
      extract_observations(cs, initial_weights(cs), small_config(), 1, 0);
  EXPECT_EQ(x.instances.size(), 5u);
}

TEST(ExtractObservations, MapTreeMode) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 1.0}, {2, 2.0}})}, table_of(3));
  auto cfg = small_config();
  cfg.obs_mode = ObsMode::kMapTree;
  const auto x = extract_observations(cs, initial_weights(cs), cfg, 1, 0);
  // greedy tree has |V_c| - 1 = 2 edges, each node one parent
  ASSERT_EQ(x.instances.size(), 2u);
  EXPECT_EQ(x.instances[0].edge.dst, 1);
  EXPECT_EQ(x.instances[1].edge.dst, 2);
}

TEST(ExtractObservations, DeterministicPerSeed) {
  Engine rng = make_engine(5, "gen");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 6; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 5; ++u)
      if (uniform01(rng) < 0.8) inf.push_back({u, uniform01(rng) * 3.0});
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(5));
  const auto d = initial_weights(cs);
  const auto a = extract_observations(cs, d, small_config(), 42, 3);
  const auto b = extract_observations(cs, d, small_config(), 42, 3);
  ASSERT_EQ(a.instances.size(), b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i)
    EXPECT_EQ(a.instances[i].edge, b.instances[i].edge);
  // a different window index shifts the extraction streams
  const auto c = extract_observations(cs, d, small_config(), 42, 4);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.instances.size(); ++i)
    any_diff |= !(a.instances[i].edge == c.instances[i].edge);
  EXPECT_TRUE(any_diff);
}

TEST(FeedbackWeights, NegLogWithFallbackAndClamp) {
  Engine rng = make_engine(6, "fw");
  MdndState st;
  st.ensure_node(0, rng);
  st.ensure_node(1, rng);
  st.add_observation({0, 1}, 0, rng);
  InferenceConfig cfg;
  WeightMap init = {{{0, 1}, 0.5}, {{1, 2}, 1.5}};
  const auto d = feedback_weights(st, init, cfg);
  const double p01 = st.predictive_edge(0, 1);
  EXPECT_NEAR(d.at({0, 1}), -std::log(p01), 1e-12);
  // node 2 unseen -> model probability 0 -> initial weight preserved
  EXPECT_DOUBLE_EQ(d.at({1, 2}), 1.5);
  EXPECT_LE(d.at({0, 1}), kMaxFeedbackWeight);
  InferenceConfig literal = cfg;
  literal.literal_weights = true;
  EXPECT_DOUBLE_EQ(feedback_weights(st, init, literal).at({0, 1}), p01);
}

TEST(FeedbackWeights, MonotoneMarginalResponse) {
  // two candidate parents for node 2; a higher predictive probability
  // means a lower weight and a weakly higher marginal next round
  const Cascade c("c", {{0, 0.0}, {1, 1.0}, {2, 2.0}});
  for (double p_strong : {0.3, 0.6, 0.9}) {
    WeightMap d = {{{0, 1}, 1.0},
                   {{0, 2}, -std::log(0.1)},
                   {{1, 2}, -std::log(p_strong)}};
    const auto td = TreeDistribution::from_cascade(c, d, 1.0);
    const auto m = edge_marginals(td);
    EXPECT_GE(m.at({1, 2}), m.at({0, 2}));
  }
}

TEST(UpdateNetworkModel, RejectsZeroSweeps) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 1.0}})}, table_of(2));
  auto cfg = small_config();
  cfg.sweeps = 0;
  MdndState st = init_model(cfg);
  Engine gibbs = make_gibbs_engine(cfg.seed, 0);
  EXPECT_THROW(update_network_model(st, cs, cfg, 0, gibbs), InvalidConfigError);
}

TEST(UpdateNetworkModel, DegeneratePosteriorConcentrates) {
  // M identical observations should coalesce into a single cluster; a
  // small alpha makes the degenerate posterior concentrate there
  const long m = 20;
  std::vector<Cascade> cascades;
  for (long i = 0; i < m; ++i)
    cascades.emplace_back("c" + std::to_string(i),
                          std::vector<Infection>{{0, 0.0}, {1, 1.0}});
  CascadeSet cs(cascades, table_of(2));
  int single_cluster = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto cfg = small_config();
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.hyper.alpha = 0.2;
    cfg.outer_iters = 1;
    cfg.sweeps = 150;
    cfg.burnin = 150;  // no retained states: point estimate at the end
    MdndState st = init_model(cfg);
    Engine gibbs = make_gibbs_engine(cfg.seed, 0);
    const auto res = update_network_model(st, cs, cfg, 0, gibbs);
    EXPECT_EQ(res.attached_observations, m);
    EXPECT_EQ(st.total_observations(), m);
    if (st.cluster_count() == 1 && st.clusters()[0].eta == m) ++single_cluster;
  }
  EXPECT_GT(double(single_cluster) / seeds, 0.9);
}

TEST(UpdateNetworkModel, ConvergenceDeltasRecorded) {
  Engine rng = make_engine(8, "conv-gen");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 10; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 4; ++u)
      if (uniform01(rng) < 0.9) inf.push_back({u, uniform01(rng) * 2.0});
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(4));
  auto cfg = small_config();
  cfg.outer_iters = 12;
  cfg.sweeps = 60;
  cfg.burnin = 20;
  cfg.thin = 2;
  cfg.conv_tol = 0.02;
  MdndState st = init_model(cfg);
  Engine gibbs = make_gibbs_engine(cfg.seed, 0);
  const auto res = update_network_model(st, cs, cfg, 0, gibbs);
  ASSERT_FALSE(res.outer_deltas.empty());
  EXPECT_LT(res.outer_deltas.back(), cfg.conv_tol);
  st.check_invariants();
}

TEST(UpdateNetworkModel, MultisetTotalMatchesSampleRule) {
  Engine rng = make_engine(9, "msize");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 8; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 5; ++u)
      if (uniform01(rng) < 0.8) inf.push_back({u, uniform01(rng) * 2.0});
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(5));
  auto cfg = small_config();
  cfg.outer_iters = 1;
  MdndState st = init_model(cfg);
  Engine gibbs = make_gibbs_engine(cfg.seed, 0);
  const auto res = update_network_model(st, cs, cfg, 0, gibbs);
  long expected = 0;
  for (const auto& c : cs.cascades()) {
    const auto e = candidate_edges(c).edges.size();
    if (e == 0) continue;
    expected += static_cast<long>(std::min(e, cfg.q.resolve(e)));
  }
  EXPECT_EQ(res.attached_observations, expected);
  EXPECT_EQ(st.total_observations(), expected);
}

TEST(UpdateNetworkModel, SurvivesThousandsOfNewNodes) {
  // a first window that introduces thousands of nodes exhausts the
  // remainder mass between Dirichlet redraws unless it is refreshed
  std::vector<Cascade> cascades;
  NodeTable table;
  for (int i = 0; i < 1400; ++i) table.add("n" + std::to_string(i));
  for (int c = 0; c < 700; ++c)
    cascades.emplace_back(
        "c" + std::to_string(c),
        std::vector<Infection>{{2 * c, 0.0}, {2 * c + 1, 0.4}});
  CascadeSet cs(std::move(cascades), std::move(table));
  auto cfg = small_config();
  cfg.outer_iters = 1;
  cfg.sweeps = 2;
  cfg.burnin = 2;
  MdndState st = init_model(cfg);
  Engine gibbs = make_gibbs_engine(cfg.seed, 0);
  const auto res = update_network_model(st, cs, cfg, 0, gibbs);
  EXPECT_EQ(res.attached_observations, 700);
  st.check_invariants();
  EXPECT_GT(st.beta_remainder(), 0.0);
}

TEST(Dyference, SingleWindowSingleSnapshot) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 0.5}})}, table_of(2));
  auto cfg = small_config();
  cfg.window = 10.0;
  const auto out = dyference(cs, cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].window_start, 0.0);
  EXPECT_GT(out[0].snapshot.probs(0, 1), 0.0);
}

TEST(Dyference, EmptyInputError) {
  CascadeSet empty({}, table_of(2));
  EXPECT_THROW(dyference(empty, small_config()), EmptyInputError);
}

TEST(Dyference, NewEdgeRaisesProbabilityInItsWindow) {
  std::vector<Cascade> cascades;
  // windows 0..2: traffic on 0->1; window 3 introduces 2->3
  for (int w = 0; w < 3; ++w)
    for (int i = 0; i < 4; ++i)
      cascades.emplace_back(
          "w" + std::to_string(w) + "_" + std::to_string(i),
          std::vector<Infection>{{0, w + 0.1}, {1, w + 0.6}});
  for (int i = 0; i < 4; ++i)
    cascades.emplace_back("w3_" + std::to_string(i),
                          std::vector<Infection>{{2, 3.1}, {3, 3.7}});
  CascadeSet cs(cascades, table_of(4));
  auto cfg = small_config();
  cfg.window = 1.0;
  const auto out = dyference(cs, cfg);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_GT(out[3].snapshot.probs(2, 3), out[2].snapshot.probs(2, 3));
  EXPECT_DOUBLE_EQ(out[2].snapshot.probs(2, 3), 0.0);
}

TEST(Dyference, DeterministicSnapshotsAndCheckpoints) {
  Engine rng = make_engine(10, "det-gen");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 12; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 5; ++u)
      if (uniform01(rng) < 0.7) inf.push_back({u, uniform01(rng) * 3.0});
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(5));
  auto cfg = small_config();
  cfg.window = 1.0;
  const auto a = dyference(cs, cfg);
  const auto b = dyference(cs, cfg);
  ASSERT_EQ(a.size(), b.size());
  std::vector<EdgeProbabilitySnapshot> sa, sb;
  for (const auto& w : a) sa.push_back(w.snapshot);
  for (const auto& w : b) sb.push_back(w.snapshot);
  EXPECT_EQ(snapshots_to_csv(sa), snapshots_to_csv(sb));
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(a[i].checkpoint.dump(), b[i].checkpoint.dump());
}

TEST(Dyference, WarmStartEquivalence) {
  Engine rng = make_engine(11, "ws-gen");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 10; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 5; ++u)
      if (uniform01(rng) < 0.8) inf.push_back({u, uniform01(rng) * 0.9});
    if (Cascade("t", inf).distinct_times() < 2) continue;
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(5));
  auto cfg = small_config();
  cfg.window = 5.0;  // covers everything: exactly one window
  const auto windows = dyference(cs, cfg);
  ASSERT_EQ(windows.size(), 1u);

  MdndState st = init_model(cfg);
  Engine gibbs = make_gibbs_engine(cfg.seed, 0);
  const auto direct = update_network_model(st, cs, cfg, 0, gibbs);
  EXPECT_EQ(snapshots_to_csv({windows[0].snapshot}),
            snapshots_to_csv({direct.snapshot}));
  EXPECT_EQ(windows[0].checkpoint.dump(),
            make_checkpoint(st, gibbs, cs.nodes()).dump());
}

TEST(Dyference, ResampleEdgesModeStaysConsistent) {
  Engine rng = make_engine(12, "re-gen");
  std::vector<Cascade> cascades;
  for (int c = 0; c < 8; ++c) {
    std::vector<Infection> inf;
    for (int u = 0; u < 4; ++u)
      if (uniform01(rng) < 0.9) inf.push_back({u, uniform01(rng) * 1.8});
    cascades.emplace_back("c" + std::to_string(c), std::move(inf));
  }
  CascadeSet cs(cascades, table_of(4));
  auto cfg = small_config();
  cfg.window = 1.0;
  cfg.resample_edges = true;
  const auto out = dyference(cs, cfg);
  EXPECT_FALSE(out.empty());
  auto loaded = load_checkpoint(out.back().checkpoint);
  loaded.model.check_invariants();
}

TEST(Dyference, ExactDppSampleMode) {
  CascadeSet cs({Cascade("c", {{0, 0.0}, {1, 0.4}, {2, 0.8}})}, table_of(3));
  auto cfg = small_config();
  cfg.exact_dpp_sample = true;
  cfg.window = 2.0;
  const auto out = dyference(cs, cfg);
  ASSERT_EQ(out.size(), 1u);
  // a DPP draw is a spanning tree: |V_c| - 1 = 2 observations
  EXPECT_EQ(out[0].attached_observations, 2);
}
