// dynet: infer a generative time-varying network model from cascades.
//
// Subcommands: generate (network | rates | cascades), infer, evaluate,
// marginals. All randomness flows from --seed through named substreams;
// identical invocations produce byte-identical outputs.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynet/errors.hpp"
#include "dynet/evalkit.hpp"
#include "dynet/graph.hpp"
#include "dynet/inference.hpp"
#include "dynet/io.hpp"
#include "dynet/mdnd.hpp"
#include "dynet/rng.hpp"
#include "dynet/synthgen.hpp"
#include "dynet/tree_dist.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dynet;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GenerateNetworkArgs {
  std::string model = "kronecker";
  std::vector<double> seed_matrix = {0.9, 0.5, 0.5, 0.3};
  int power = 10;
  long edges = 2500;
  int n = 1024;
  double fwd = 0.2;
  double bwd = 0.17;
  double rate_min = 0.01, rate_max = 2.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate_network(const GenerateNetworkArgs& a) {
  Engine rng = make_engine(a.seed, "generate-network");
  GroundTruthNetwork net;
  if (a.model == "kronecker") {
    if (a.seed_matrix.size() != 4)
      throw InvalidConfigError("--seed-matrix needs 4 entries");
    KroneckerParams p;
    p.seed = {a.seed_matrix[0], a.seed_matrix[1], a.seed_matrix[2],
              a.seed_matrix[3]};
    p.power = a.power;
    p.target_edges = a.edges;
    p.rate_min = a.rate_min;
    p.rate_max = a.rate_max;
    net = kronecker_graph(p, rng);
  } else if (a.model == "forestfire") {
    ForestFireParams p;
    p.node_count = a.n;
    p.forward = a.fwd;
    p.backward = a.bwd;
    p.rate_min = a.rate_min;
    p.rate_max = a.rate_max;
    net = forest_fire(p, rng);
  } else {
    throw InvalidConfigError("unknown network model: " + a.model);
  }
  write_file(a.out, network_to_string(net));
  std::cout << "network: " << net.node_count << " nodes, "
            << net.snapshots.at(0).size() << " edges -> " << a.out << "\n";
  return 0;
}

struct GenerateRatesArgs {
  std::string network;
  int steps = 100;
  double rate_min = 0.01, rate_max = 2.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate_rates(const GenerateRatesArgs& a) {
  const auto base = network_from_string(read_file(a.network));
  Engine rng = make_engine(a.seed, "generate-rates");
  const auto dyn = evolve_rates(base, a.steps, rng, a.rate_min, a.rate_max);
  write_file(a.out, network_to_string(dyn));
  std::size_t live = 0;
  for (const auto& [t, snap] : dyn.snapshots) live += snap.size();
  std::cout << "rates: " << a.steps << " steps, " << live
            << " live edge-steps -> " << a.out << "\n";
  return 0;
}

struct GenerateCascadesArgs {
  std::string network;
  std::string rates;  // optional dynamic trajectory
  long per_step = 500;
  int steps = 100;
  std::string transmission = "exp";
  double horizon = 10.0;
  double pwl_k = 2.0;
  double delta_min = 0.01;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

int cmd_generate_cascades(const GenerateCascadesArgs& a) {
  const auto net = network_from_string(read_file(a.network));
  std::optional<GroundTruthNetwork> dyn;
  if (!a.rates.empty()) dyn = network_from_string(read_file(a.rates));
  TransmissionModel tm;
  if (a.transmission == "exp")
    tm.kind = TransmissionKind::kExponential;
  else if (a.transmission == "ray")
    tm.kind = TransmissionKind::kRayleigh;
  else if (a.transmission == "pwl")
    tm.kind = TransmissionKind::kPowerLaw;
  else
    throw InvalidConfigError("unknown transmission model: " + a.transmission);
  tm.powerlaw_k = a.pwl_k;
  tm.delta_min = a.delta_min;

  const int node_count = dyn ? dyn->node_count : net.node_count;
  std::vector<Cascade> all;
  NodeTable table;
  for (int i = 0; i < node_count; ++i) table.add("n" + std::to_string(i));
  long skipped_steps = 0;
  for (int t = 0; t < a.steps; ++t) {
    const std::vector<RatedEdge>* live = nullptr;
    if (dyn) {
      auto it = dyn->snapshots.find(t);
      if (it == dyn->snapshots.end() || it->second.empty()) {
        ++skipped_steps;
        continue;
      }
      live = &it->second;
    } else {
      live = &net.at_step(0);
    }
    CascadeSimParams params;
    params.count = a.per_step;
    params.horizon = a.horizon;
    params.id_prefix = "s" + std::to_string(t) + "_c";
    params.time_offset = static_cast<double>(t);
    params.threads = a.threads;
    auto cs = simulate_cascades(*live, node_count, tm, params, a.seed,
                                static_cast<std::uint64_t>(t));
    for (const auto& c : cs.cascades()) all.push_back(c);
  }
  const CascadeSet out_set(std::move(all), std::move(table));
  write_file(a.out, cascades_to_string(out_set));
  std::cout << "cascades: " << out_set.size() << " over " << a.steps
            << " steps (" << skipped_steps << " dead steps) -> " << a.out
            << "\n";
  return 0;
}

struct InferArgs {
  std::string cascades;
  std::string out_dir;
  InferenceConfig cfg;
  long q_fixed = 0;
  double q_ratio = 0.0;
  std::string obs_mode = "dpp-marginal";
  double min_prob = 0.0;
};

int cmd_infer(InferArgs& a) {
  if (a.q_fixed > 0 && a.q_ratio > 0.0)
    throw InvalidConfigError("--q and --q-ratio are mutually exclusive");
  if (a.q_fixed > 0) a.cfg.q = {SampleSizeRule::Kind::kFixed, a.q_fixed, 0.0};
  if (a.q_ratio > 0.0)
    a.cfg.q = {SampleSizeRule::Kind::kRatio, 0, a.q_ratio};
  if (a.obs_mode == "dpp-marginal")
    a.cfg.obs_mode = ObsMode::kDppMarginal;
  else if (a.obs_mode == "map-tree")
    a.cfg.obs_mode = ObsMode::kMapTree;
  else
    throw InvalidConfigError("unknown --obs-mode: " + a.obs_mode);
  a.cfg.validate();

  const std::string cascade_text = read_file(a.cascades);
  const auto cs = cascades_from_string(cascade_text);

  fs::create_directories(fs::path(a.out_dir) / "checkpoints");

  std::vector<std::pair<double, double>> timings;
  const auto t0 = std::chrono::steady_clock::now();
  auto windows = dyference(cs, a.cfg);
  std::vector<EdgeProbabilitySnapshot> snaps;
  std::size_t skipped = 0;
  double last_mark = 0.0;
  for (const auto& w : windows) {
    snaps.push_back(w.snapshot);
    skipped += w.skipped_cascades;
    const double mark = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    timings.push_back({w.window_start, mark - last_mark});
    last_mark = mark;
    char name[32];
    std::snprintf(name, sizeof name, "window_%04d.json", w.window_index);
    write_file((fs::path(a.out_dir) / "checkpoints" / name).string(),
               w.checkpoint.dump(2) + "\n");
  }
  write_file((fs::path(a.out_dir) / "snapshots.csv").string(),
             snapshots_to_csv(snaps, a.min_prob));

  json manifest;
  manifest["tool"] = "dynet";
  manifest["version"] = kVersion;
  manifest["command"] = "infer";
  manifest["seed"] = a.cfg.seed;
  json cfg_json;
  cfg_json["seed"] = a.cfg.seed;  // the config block alone replays the run
  cfg_json["window"] = a.cfg.window;
  cfg_json["lambda"] = a.cfg.lambda;
  cfg_json["outer_iters"] = a.cfg.outer_iters;
  cfg_json["sweeps"] = a.cfg.sweeps;
  cfg_json["burnin"] = a.cfg.burnin;
  cfg_json["thin"] = a.cfg.thin;
  cfg_json["conv_tol"] = a.cfg.conv_tol;
  cfg_json["alpha"] = a.cfg.hyper.alpha;
  cfg_json["tau"] = a.cfg.hyper.tau;
  cfg_json["gamma"] = a.cfg.hyper.gamma;
  cfg_json["obs_mode"] = a.obs_mode;
  cfg_json["q_fixed"] = a.q_fixed;
  cfg_json["q_ratio"] = a.q_ratio;
  cfg_json["literal_pe"] = a.cfg.literal_pe;
  cfg_json["literal_weights"] = a.cfg.literal_weights;
  cfg_json["resample_edges"] = a.cfg.resample_edges;
  cfg_json["exact_dpp_sample"] = a.cfg.exact_dpp_sample;
  cfg_json["min_prob"] = a.min_prob;
  manifest["config"] = std::move(cfg_json);
  manifest["inputs"] = {
      {"cascades", {{"path", a.cascades}, {"digest", content_digest(cascade_text)}}}};
  manifest["outputs"] = {{"snapshots", "snapshots.csv"},
                         {"checkpoints", "checkpoints"}};
  manifest["windows"] = windows.size();
  manifest["skipped_cascades"] = skipped;
  write_file((fs::path(a.out_dir) / "manifest.json").string(),
             manifest.dump(2) + "\n");

  // wall-clock lives outside the manifest so reruns stay byte-identical
  std::ostringstream tcsv;
  tcsv << "window_start,seconds\n";
  for (const auto& [start, sec] : timings)
    tcsv << format_double(start) << ',' << sec << '\n';
  write_file((fs::path(a.out_dir) / "timings.csv").string(), tcsv.str());

  std::cout << "infer: " << windows.size() << " windows, "
            << cs.size() << " cascades (" << skipped
            << " skipped) -> " << a.out_dir << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string snapshots;
  std::string truth;
  std::string cascades;
  std::string metrics = "f1";
  std::vector<int> ks = {10, 50, 100};
  std::string mode = "top-m";
  double threshold = 0.5;
  long m = 0;
  double window = 0.0;  // 0 = infer from snapshot starts
  std::string score = "noisy-or";
  double train_frac = 0.8;
  std::string rank_dump;
  std::string out;
};

EdgeSet truth_edges_at(const GroundTruthNetwork& net, int window,
                       double window_start) {
  if (net.is_static) {
    EdgeSet out;
    for (const auto& re : net.snapshots.at(0)) out.insert(re.edge);
    return out;
  }
  auto it = net.snapshots.find(window);
  if (it == net.snapshots.end())
    throw AlignmentError("no ground-truth window " + std::to_string(window) +
                         " for snapshot at t=" + format_double(window_start));
  EdgeSet out;
  for (const auto& re : it->second) out.insert(re.edge);
  return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const auto snaps = snapshots_from_csv(read_file(a.snapshots), 0);
  if (snaps.empty()) throw EmptyInputError("no snapshots to evaluate");
  std::set<std::string> wanted;
  for (const auto& piece : split(a.metrics, ','))
    wanted.insert(std::string(piece));

  double w = a.window;
  if (w <= 0.0)
    w = snaps.size() > 1 ? snaps[1].window_start - snaps[0].window_start : 1.0;

  std::vector<MetricsRow> rows;

  if (wanted.count("f1") || wanted.count("precision") ||
      wanted.count("recall")) {
    if (a.truth.empty())
      throw InvalidConfigError("precision/recall/f1 need --truth");
    const auto net = network_from_string(read_file(a.truth));
    BinarizeMode mode;
    if (a.mode == "top-m") {
      mode.kind = BinarizeMode::Kind::kTopM;
      mode.m = a.m;
    } else if (a.mode == "threshold") {
      mode.kind = BinarizeMode::Kind::kThreshold;
      mode.threshold = a.threshold;
    } else if (a.mode == "best-f1") {
      mode.kind = BinarizeMode::Kind::kBestF1;
    } else {
      throw InvalidConfigError("unknown --mode: " + a.mode);
    }
    for (const auto& snap : snaps) {
      const int win = static_cast<int>(std::lround(snap.window_start / w));
      const auto truth = truth_edges_at(net, win, snap.window_start);
      const auto pred = binarize(snap, mode, &truth);
      const auto prf = precision_recall_f1(pred, truth);
      if (wanted.count("precision"))
        rows.push_back({snap.window_start, "precision", 0, prf.precision});
      if (wanted.count("recall"))
        rows.push_back({snap.window_start, "recall", 0, prf.recall});
      if (wanted.count("f1"))
        rows.push_back({snap.window_start, "f1", 0, prf.f1});
      rows.push_back({snap.window_start, "predicted_edges", 0,
                      static_cast<double>(pred.size())});
      rows.push_back({snap.window_start, "true_edges", 0,
                      static_cast<double>(truth.size())});
    }
  }

  if (wanted.count("map") || wanted.count("hits")) {
    if (a.cascades.empty())
      throw InvalidConfigError("map/hits need --cascades");
    const auto cs = cascades_from_string(read_file(a.cascades));
    const double t_max = cs.max_time();
    const double split = a.train_frac * t_max;
    const RankScore score = a.score == "max" ? RankScore::kMaxSource
                                             : RankScore::kNoisyOr;
    const auto snapshot_for = [&](double t) -> const Eigen::MatrixXd& {
      const EdgeProbabilitySnapshot* best = &snaps.front();
      for (const auto& s : snaps)
        if (s.window_start <= t) best = &s;
      return best->probs;
    };
    std::vector<RankingEvent> events;
    std::ostringstream dump;
    dump << "event,rank,node,realized\n";
    long event_id = 0;
    for (const auto& c : cs.cascades()) {
      const auto& inf = c.infections();
      std::vector<NodeIndex> prefix;
      std::size_t i = 0;
      while (i < inf.size()) {
        std::size_t j = i;
        while (j < inf.size() && inf[j].time == inf[i].time) ++j;
        if (!prefix.empty() && inf[i].time >= split) {
          RankingEvent ev;
          ev.ranking = rank_next_infections(snapshot_for(inf[i].time),
                                            prefix, score);
          for (std::size_t t = i; t < j; ++t)
            ev.realized.push_back(inf[t].node);
          if (!a.rank_dump.empty()) {
            const std::set<NodeIndex> realized(ev.realized.begin(),
                                               ev.realized.end());
            for (std::size_t r = 0; r < ev.ranking.size(); ++r)
              dump << event_id << ',' << r + 1 << ',' << ev.ranking[r] << ','
                   << realized.count(ev.ranking[r]) << '\n';
          }
          events.push_back(std::move(ev));
          ++event_id;
        }
        for (std::size_t t = i; t < j; ++t) prefix.push_back(inf[t].node);
        i = j;
      }
    }
    const auto rm = map_hits_at_k(events, a.ks);
    for (int k : a.ks) {
      if (wanted.count("map"))
        rows.push_back({split, "map", k, rm.map_at_k.at(k)});
      if (wanted.count("hits"))
        rows.push_back({split, "hits", k, rm.hits_at_k.at(k)});
    }
    if (!a.rank_dump.empty()) write_file(a.rank_dump, dump.str());
    std::cout << "evaluate: " << events.size() << " ranking events\n";
  }

  const std::string csv = metrics_to_csv(rows);
  if (a.out.empty())
    std::cout << csv;
  else
    write_file(a.out, csv);
  return 0;
}

struct MarginalsArgs {
  std::string cascades;
  double lambda = 1.0;
  std::string cascade_id;
  std::string out;
};

int cmd_marginals(const MarginalsArgs& a) {
  const auto cs = cascades_from_string(read_file(a.cascades));
  const auto d = initial_weights(cs);
  std::ostringstream csv;
  csv << "src,dst,marginal\n";
  for (const auto& c : cs.cascades()) {
    if (!a.cascade_id.empty() && c.id() != a.cascade_id) continue;
    if (c.distinct_times() < 2) continue;
    const auto td = TreeDistribution::from_cascade(c, d, a.lambda);
    if (td.edge_count() == 0) continue;
    for (const auto& [e, p] : edge_marginals(td))
      csv << e.src << ',' << e.dst << ',' << format_double(p) << '\n';
  }
  if (a.out.empty())
    std::cout << csv.str();
  else
    write_file(a.out, csv.str());
  return 0;
}

/// Applies a JSON config file as defaults. Flags given on the command
/// line override file values because the file is applied before parsing.
template <typename T>
void from_config(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

json load_config_if_requested(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config")
      return json::parse(read_file(argv[i + 1]));
  return json::object();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative dynamic network inference from cascades"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  json file_cfg;
  try {
    file_cfg = load_config_if_requested(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  auto* generate = app.add_subcommand("generate", "synthetic data generators");
  generate->require_subcommand(1);

  GenerateNetworkArgs gn;
  from_config(file_cfg, "model", gn.model);
  from_config(file_cfg, "power", gn.power);
  from_config(file_cfg, "edges", gn.edges);
  from_config(file_cfg, "n", gn.n);
  from_config(file_cfg, "seed", gn.seed);
  auto* gen_net = generate->add_subcommand("network", "static topology");
  gen_net->add_option("--model", gn.model, "kronecker | forestfire");
  gen_net->add_option("--seed-matrix", gn.seed_matrix,
                      "2x2 Kronecker seed, row-major")
      ->expected(4)
      ->delimiter(',');
  gen_net->add_option("--power", gn.power, "Kronecker power (nodes = 2^power)");
  gen_net->add_option("--edges", gn.edges, "Kronecker target edge count");
  gen_net->add_option("--n", gn.n, "forest-fire node count");
  gen_net->add_option("--fwd", gn.fwd, "forward burning probability");
  gen_net->add_option("--bwd", gn.bwd, "backward burning probability");
  gen_net->add_option("--rate-min", gn.rate_min);
  gen_net->add_option("--rate-max", gn.rate_max);
  gen_net->add_option("--seed", gn.seed, "rng seed");
  gen_net->add_option("--out", gn.out, "output network file")->required();
  gen_net->add_option("--config", "JSON config file (flags override)");

  GenerateRatesArgs gr;
  from_config(file_cfg, "steps", gr.steps);
  from_config(file_cfg, "seed", gr.seed);
  auto* gen_rates = generate->add_subcommand("rates", "edge-rate evolution");
  gen_rates->add_option("--network", gr.network, "static network file")
      ->required();
  gen_rates->add_option("--steps", gr.steps, "time steps");
  gen_rates->add_option("--rate-min", gr.rate_min);
  gen_rates->add_option("--rate-max", gr.rate_max);
  gen_rates->add_option("--seed", gr.seed, "rng seed");
  gen_rates->add_option("--out", gr.out, "output rates file")->required();
  gen_rates->add_option("--config", "JSON config file (flags override)");

  GenerateCascadesArgs gc;
  from_config(file_cfg, "per_step", gc.per_step);
  from_config(file_cfg, "steps", gc.steps);
  from_config(file_cfg, "transmission", gc.transmission);
  from_config(file_cfg, "horizon", gc.horizon);
  from_config(file_cfg, "seed", gc.seed);
  auto* gen_casc = generate->add_subcommand("cascades", "diffusion simulation");
  gen_casc->add_option("--network", gc.network, "static network file")
      ->required();
  gen_casc->add_option("--rates", gc.rates, "dynamic rates file (optional)");
  gen_casc->add_option("--per-step", gc.per_step, "cascades per time step");
  gen_casc->add_option("--steps", gc.steps, "time steps");
  gen_casc->add_option("--transmission", gc.transmission, "exp | ray | pwl");
  gen_casc->add_option("--horizon", gc.horizon, "per-cascade time horizon");
  gen_casc->add_option("--pwl-k", gc.pwl_k, "power-law exponent");
  gen_casc->add_option("--delta-min", gc.delta_min, "power-law minimum delay");
  gen_casc->add_option("--seed", gc.seed, "rng seed");
  gen_casc->add_option("--threads", gc.threads, "worker threads (0 = cores)")
      ->envname("DYNET_THREADS");
  gen_casc->add_option("--out", gc.out, "output cascade file")->required();
  gen_casc->add_option("--config", "JSON config file (flags override)");

  InferArgs inf;
  from_config(file_cfg, "window", inf.cfg.window);
  from_config(file_cfg, "lambda", inf.cfg.lambda);
  from_config(file_cfg, "outer_iters", inf.cfg.outer_iters);
  from_config(file_cfg, "sweeps", inf.cfg.sweeps);
  from_config(file_cfg, "burnin", inf.cfg.burnin);
  from_config(file_cfg, "thin", inf.cfg.thin);
  from_config(file_cfg, "conv_tol", inf.cfg.conv_tol);
  from_config(file_cfg, "seed", inf.cfg.seed);
  from_config(file_cfg, "alpha", inf.cfg.hyper.alpha);
  from_config(file_cfg, "tau", inf.cfg.hyper.tau);
  from_config(file_cfg, "gamma", inf.cfg.hyper.gamma);
  from_config(file_cfg, "obs_mode", inf.obs_mode);
  from_config(file_cfg, "q_fixed", inf.q_fixed);
  from_config(file_cfg, "q_ratio", inf.q_ratio);
  from_config(file_cfg, "literal_pe", inf.cfg.literal_pe);
  from_config(file_cfg, "literal_weights", inf.cfg.literal_weights);
  from_config(file_cfg, "resample_edges", inf.cfg.resample_edges);
  from_config(file_cfg, "exact_dpp_sample", inf.cfg.exact_dpp_sample);
  from_config(file_cfg, "min_prob", inf.min_prob);
  auto* infer = app.add_subcommand("infer", "windowed online inference");
  infer->add_option("--cascades", inf.cascades, "cascade file")->required();
  infer->add_option("--window", inf.cfg.window, "window width w");
  infer->add_option("--lambda", inf.cfg.lambda, "tree-measure temperature");
  infer->add_option("--outer", inf.cfg.outer_iters, "outer iterations");
  infer->add_option("--sweeps", inf.cfg.sweeps, "Gibbs sweeps per iteration");
  infer->add_option("--burnin", inf.cfg.burnin, "burn-in sweeps");
  infer->add_option("--thin", inf.cfg.thin, "snapshot thinning");
  infer->add_option("--conv-tol", inf.cfg.conv_tol, "outer stopping tolerance");
  infer->add_option("--seed", inf.cfg.seed, "master rng seed");
  infer->add_option("--alpha", inf.cfg.hyper.alpha, "cluster concentration");
  infer->add_option("--tau", inf.cfg.hyper.tau, "overlap concentration");
  infer->add_option("--gamma", inf.cfg.hyper.gamma, "edge-mass concentration");
  infer->add_option("--q", inf.q_fixed, "fixed sample size per cascade");
  infer->add_option("--q-ratio", inf.q_ratio, "sample size as ratio of |E_c|");
  infer->add_option("--obs-mode", inf.obs_mode, "dpp-marginal | map-tree");
  infer->add_flag("--literal-pe", inf.cfg.literal_pe,
                  "published predictive case factors verbatim");
  infer->add_flag("--literal-weights", inf.cfg.literal_weights,
                  "feed d = p instead of d = -log p");
  infer->add_flag("--resample-edges", inf.cfg.resample_edges,
                  "redraw observation identities from the predictive");
  infer->add_flag("--exact-dpp-sample", inf.cfg.exact_dpp_sample,
                  "exact DPP draws instead of marginal-weighted sampling");
  infer->add_option("--min-prob", inf.min_prob,
                    "omit snapshot entries below this probability");
  infer->add_option("--threads", inf.cfg.threads, "worker threads (0 = cores)")
      ->envname("DYNET_THREADS");
  infer->add_option("--out", inf.out_dir, "run output directory")->required();
  infer->add_option("--config", "JSON config file (flags override)");

  EvaluateArgs ev;
  from_config(file_cfg, "metrics", ev.metrics);
  from_config(file_cfg, "mode", ev.mode);
  from_config(file_cfg, "train_frac", ev.train_frac);
  auto* evaluate = app.add_subcommand("evaluate", "score snapshots");
  evaluate->add_option("--snapshots", ev.snapshots, "snapshot CSV")->required();
  evaluate->add_option("--truth", ev.truth, "ground-truth network file");
  evaluate->add_option("--cascades", ev.cascades, "cascades for map/hits");
  evaluate->add_option("--metrics", ev.metrics,
                       "comma list: precision,recall,f1,map,hits");
  evaluate->add_option("--k", ev.ks, "ranking cutoffs")->delimiter(',');
  evaluate->add_option("--mode", ev.mode, "top-m | threshold | best-f1");
  evaluate->add_option("--threshold", ev.threshold);
  evaluate->add_option("--m", ev.m, "top-m size (0 = |truth|)");
  evaluate->add_option("--window", ev.window,
                       "window width (0 = infer from snapshots)");
  evaluate->add_option("--score", ev.score, "noisy-or | max");
  evaluate->add_option("--train-frac", ev.train_frac,
                       "chronological train fraction for ranking events");
  evaluate->add_option("--rank-dump", ev.rank_dump, "ranking audit CSV");
  evaluate->add_option("--out", ev.out, "metrics CSV (default stdout)");
  evaluate->add_option("--config", "JSON config file (flags override)");

  MarginalsArgs mg;
  auto* marginals =
      app.add_subcommand("marginals", "dump per-cascade edge marginals");
  marginals->add_option("--cascades", mg.cascades, "cascade file")->required();
  marginals->add_option("--lambda", mg.lambda, "tree-measure temperature");
  marginals->add_option("--cascade-id", mg.cascade_id, "restrict to one id");
  marginals->add_option("--out", mg.out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen_net->parsed()) return cmd_generate_network(gn);
    if (gen_rates->parsed()) return cmd_generate_rates(gr);
    if (gen_casc->parsed()) return cmd_generate_cascades(gc);
    if (infer->parsed()) return cmd_infer(inf);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (marginals->parsed()) return cmd_marginals(mg);
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
