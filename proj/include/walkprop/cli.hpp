#pragma once

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "walkprop/attribution_io.hpp"
#include "walkprop/ba2motif.hpp"
#include "walkprop/bench.hpp"
#include "walkprop/dataset_io.hpp"
#include "walkprop/forward_hook.hpp"
#include "walkprop/lrp.hpp"
#include "walkprop/model_io.hpp"
#include "walkprop/ordering.hpp"
#include "walkprop/train.hpp"
#include "walkprop/tu_format.hpp"

namespace walkprop {

namespace cli_detail {

// "3,5,7" or "1..6" -> list of sizes
inline std::vector<std::size_t> parse_size_list(const std::string& spec) {
  std::vector<std::size_t> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = std::stoul(spec.substr(0, dots));
    const std::size_t hi = std::stoul(spec.substr(dots + 2));
    if (hi < lo) throw ArgumentError("bad range \"" + spec + "\"");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  if (out.empty()) throw ArgumentError("empty list \"" + spec + "\"");
  return out;
}

inline std::vector<std::string> split_csv(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::uint64_t walk_budget_from_env() {
  if (const char* v = std::getenv("WALKPROP_WALK_BUDGET")) return std::stoull(v);
  return kDefaultWalkBudget;
}

inline void run_indexed(std::size_t n, std::size_t threads,
                        const std::function<void(std::size_t)>& fn) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// per-class contiguous split: the last test_frac of each class's graphs
// (in dataset order) form the test set
inline void split_dataset(const Dataset& ds, double test_frac, Dataset& train, Dataset& test) {
  train.name = ds.name + "-train";
  test.name = ds.name + "-test";
  train.feature_dim = test.feature_dim = ds.feature_dim;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < ds.graphs.size(); ++i)
      if (ds.graphs[i].label && *ds.graphs[i].label == cls) ids.push_back(i);
    const std::size_t n_train =
        static_cast<std::size_t>(static_cast<double>(ids.size()) * (1.0 - test_frac) + 0.5);
    for (std::size_t k = 0; k < ids.size(); ++k)
      (k < n_train ? train : test).graphs.push_back(ds.graphs[ids[k]]);
  }
}

struct CommonLrpFlags {
  double gamma = 0.0;
  double eps = 1e-9;
  double alpha = 0.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--gamma", gamma, "LRP-gamma weight lift");
    cmd->add_option("--eps", eps, "denominator stabilizer");
    cmd->add_option("--alpha", alpha, "out-of-subgraph discount in [0,1]");
    cmd->add_option("--seed", seed, "random seed");
  }

  LrpConfig lrp() const {
    LrpConfig cfg;
    cfg.gamma = gamma;
    cfg.eps = eps;
    cfg.alpha = alpha;
    cfg.validate();
    return cfg;
  }
};

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"walkprop: subgraph attribution for graph neural networks via message passing"};
  app.require_subcommand(1);

  // ---- gen-ba2motif ----
  auto* gen = app.add_subcommand("gen-ba2motif", "generate the two-motif synthetic dataset");
  std::size_t gen_n = 1000;
  std::string gen_out;
  Ba2MotifConfig gen_cfg;
  cli_detail::CommonLrpFlags gen_flags;
  gen->add_option("--n", gen_n, "number of graphs (even)")->required();
  gen->add_option("--out", gen_out, "output NDJSON path")->required();
  gen->add_option("--base-nodes", gen_cfg.base_nodes, "BA base graph size");
  gen->add_option("--attach-edges", gen_cfg.attach_edges, "BA edges per new node");
  gen_flags.attach(gen);

  // ---- ingest-tu ----
  auto* ingest = app.add_subcommand("ingest-tu", "read a TUDataset directory");
  std::string tu_dir, tu_name, tu_out;
  cli_detail::CommonLrpFlags tu_flags;
  ingest->add_option("--dir", tu_dir, "dataset directory")->required();
  ingest->add_option("--name", tu_name, "dataset name (file prefix)")->required();
  ingest->add_option("--out", tu_out, "output NDJSON path")->required();
  tu_flags.attach(ingest);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a GNN classifier");
  std::string train_data, train_out, train_kind = "gin";
  std::size_t train_depth = 3, train_hidden = 20, train_epochs = 150, train_head_layers = 1;
  double train_lr = 0.001, train_test_frac = 0.2;
  bool train_no_bias = false;
  cli_detail::CommonLrpFlags train_flags;
  train_cmd->add_option("--data", train_data, "NDJSON dataset")->required();
  train_cmd->add_option("--out", train_out, "output model JSON path")->required();
  train_cmd->add_option("--kind", train_kind, "block kind: gin|gcn");
  train_cmd->add_option("--depth", train_depth, "number of interaction blocks");
  train_cmd->add_option("--hidden", train_hidden, "hidden width");
  train_cmd->add_option("--epochs", train_epochs, "training epochs");
  train_cmd->add_option("--lr", train_lr, "initial learning rate");
  train_cmd->add_option("--test-frac", train_test_frac, "held-out fraction per class");
  train_cmd->add_option("--head-layers", train_head_layers, "readout head depth");
  train_cmd->add_flag("--no-bias", train_no_bias, "train without bias terms");
  train_flags.attach(train_cmd);

  // ---- attribute ----
  auto* attr = app.add_subcommand("attribute", "subgraph relevance for one graph");
  std::string attr_model, attr_data, attr_nodes, attr_rule = "mp", attr_out;
  std::size_t attr_graph = 0;
  int attr_target = -1;
  cli_detail::CommonLrpFlags attr_flags;
  attr->add_option("--model", attr_model, "model JSON")->required();
  attr->add_option("--data", attr_data, "NDJSON dataset")->required();
  attr->add_option("--graph", attr_graph, "graph index");
  attr->add_option("--nodes", attr_nodes, "subgraph nodes, e.g. 1,2,3 (empty set if omitted)");
  attr->add_option("--rule", attr_rule, "naive|mp|forward_hook");
  attr->add_option("--target-class", attr_target, "target class (default: label, else argmax)");
  attr->add_option("--out", attr_out, "output JSON path (default: stdout)");
  attr_flags.attach(attr);

  // ---- order ----
  auto* order_cmd = app.add_subcommand("order", "greedy node ordering for one graph");
  std::string order_model, order_data, order_mode = "activation", order_out;
  std::size_t order_graph = 0;
  cli_detail::CommonLrpFlags order_flags;
  order_cmd->add_option("--model", order_model, "model JSON")->required();
  order_cmd->add_option("--data", order_data, "NDJSON dataset")->required();
  order_cmd->add_option("--graph", order_graph, "graph index");
  order_cmd->add_option("--mode", order_mode, "activation|pruning");
  order_cmd->add_option("--out", order_out, "output JSON path (default: stdout)");
  order_flags.attach(order_cmd);

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "node-ordering metrics over a dataset");
  std::string eval_model, eval_data, eval_mode = "activation", eval_out;
  std::size_t eval_max_graphs = 50, eval_parallel = 1;
  cli_detail::CommonLrpFlags eval_flags;
  eval_cmd->add_option("--model", eval_model, "model JSON")->required();
  eval_cmd->add_option("--data", eval_data, "NDJSON dataset")->required();
  eval_cmd->add_option("--mode", eval_mode, "activation|pruning");
  eval_cmd->add_option("--max-graphs", eval_max_graphs, "number of graphs to evaluate");
  eval_cmd->add_option("--out", eval_out, "output CSV path")->required();
  eval_cmd->add_option("--parallel", eval_parallel, "worker threads (per-graph)");
  eval_flags.attach(eval_cmd);

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand("bench", "attribution runtime sweep");
  std::string bench_data, bench_depths = "3", bench_sizes = "5", bench_methods = "naive,mp";
  std::string bench_out, bench_kind = "gin";
  std::size_t bench_repeats = 3, bench_graphs = 50, bench_hidden = 20;
  double bench_time_cap = 360.0;
  cli_detail::CommonLrpFlags bench_flags;
  bench_cmd->add_option("--data", bench_data, "NDJSON dataset")->required();
  bench_cmd->add_option("--depths", bench_depths, "model depths, e.g. 3,5,7 or 1..6");
  bench_cmd->add_option("--subgraph,--sizes", bench_sizes, "subgraph sizes, e.g. 5 or 1..19");
  bench_cmd->add_option("--methods", bench_methods, "comma list of naive|mp|forward_hook");
  bench_cmd->add_option("--repeats", bench_repeats, "timed repeats per graph");
  bench_cmd->add_option("--graphs", bench_graphs, "graphs per cell");
  bench_cmd->add_option("--hidden", bench_hidden, "hidden width of the swept models");
  bench_cmd->add_option("--kind", bench_kind, "block kind: gin|gcn");
  bench_cmd->add_option("--time-cap", bench_time_cap, "seconds per cell before 'failed'");
  bench_cmd->add_option("--out", bench_out, "output CSV path")->required();
  bench_flags.attach(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      Dataset ds = generate_ba2motif(gen_n, gen_flags.seed, gen_cfg);
      save_dataset_ndjson(ds, gen_out);
      nlohmann::json j{{"graphs", ds.graphs.size()}, {"out", gen_out}};
      std::cout << j.dump() << "\n";
    } else if (*ingest) {
      Dataset ds = ingest_tu(tu_dir, tu_name);
      save_dataset_ndjson(ds, tu_out);
      nlohmann::json j{{"graphs", ds.graphs.size()},
                       {"feature_dim", ds.feature_dim},
                       {"out", tu_out}};
      std::cout << j.dump() << "\n";
    } else if (*train_cmd) {
      Dataset ds = load_dataset_ndjson(train_data);
      Dataset train_split, test_split;
      cli_detail::split_dataset(ds, train_test_frac, train_split, test_split);
      if (train_split.graphs.empty()) throw ArgumentError("train: empty training split");
      ModelInit init;
      init.kind = train_kind == "gcn" ? BlockKind::gcn : BlockKind::gin;
      if (train_kind != "gcn" && train_kind != "gin")
        throw ArgumentError("train: unknown kind \"" + train_kind + "\"");
      init.depth = train_depth;
      init.input_dim = ds.feature_dim;
      init.hidden_dim = train_hidden;
      init.head_layers = train_head_layers;
      init.with_bias = !train_no_bias;
      Rng rng(train_flags.seed);
      GnnModel model = make_model(init, rng);
      TrainConfig tc;
      tc.epochs = train_epochs;
      tc.lr = train_lr;
      tc.seed = train_flags.seed + 1;
      TrainResult result = train_sgd(std::move(model), train_split, tc);
      save_model_file(result.model, train_out);
      nlohmann::json j{{"initial_epoch_loss", result.initial_epoch_loss},
                       {"final_epoch_loss", result.final_epoch_loss},
                       {"train_accuracy", accuracy(result.model, train_split)},
                       {"test_accuracy", accuracy(result.model, test_split)},
                       {"n_train", train_split.graphs.size()},
                       {"n_test", test_split.graphs.size()},
                       {"out", train_out}};
      std::cout << j.dump() << "\n";
    } else if (*attr) {
      GnnModel model = load_model_file(attr_model);
      Dataset ds = load_dataset_ndjson(attr_data);
      if (attr_graph >= ds.graphs.size()) throw ArgumentError("attribute: graph index out of range");
      const Graph& g = ds.graphs[attr_graph];
      std::vector<std::size_t> nodes;
      if (!attr_nodes.empty())
        for (std::size_t v : cli_detail::parse_size_list(attr_nodes)) nodes.push_back(v);
      NodeSet subgraph{std::move(nodes)};
      const std::size_t target = attr_target >= 0 ? static_cast<std::size_t>(attr_target)
                                                  : default_target_class(g, model);
      const LrpConfig lrp = attr_flags.lrp();
      RelevanceResult res;
      if (attr_rule == "forward_hook") {
        res = forward_hook_relevance(model, g, target, lrp, subgraph);
      } else {
        ForwardTrace trace = forward(model, g, target);
        LrpContext ctx = make_lrp_context(trace, model, lrp);
        if (attr_rule == "naive") {
          if (lrp.alpha != 0.0)
            throw ArgumentError("attribute: the naive rule enumerates in-subgraph walks only; "
                                "use --alpha 0");
          res = subgraph_relevance_naive(ctx, subgraph, cli_detail::walk_budget_from_env());
        } else if (attr_rule == "mp")
          res = generalized_relevance_mp(ctx, subgraph);
        else
          throw ArgumentError("attribute: unknown rule \"" + attr_rule + "\"");
      }
      nlohmann::json j = attribution_to_json(res, model_hash(model), graph_hash(g));
      if (attr_out.empty()) {
        std::cout << j.dump() << "\n";
      } else {
        std::ofstream out(attr_out);
        if (!out) throw IoError("cannot open " + attr_out + " for writing");
        out << j.dump() << "\n";
      }
    } else if (*order_cmd) {
      GnnModel model = load_model_file(order_model);
      Dataset ds = load_dataset_ndjson(order_data);
      if (order_graph >= ds.graphs.size()) throw ArgumentError("order: graph index out of range");
      const Graph& g = ds.graphs[order_graph];
      const OrderingMode mode =
          order_mode == "pruning" ? OrderingMode::pruning : OrderingMode::activation;
      if (order_mode != "pruning" && order_mode != "activation")
        throw ArgumentError("order: unknown mode \"" + order_mode + "\"");
      NodeOrdering ordering = greedy_order(model, g, order_flags.lrp(), mode);
      nlohmann::json j{{"graph", order_graph},
                       {"mode", to_string(mode)},
                       {"alpha", ordering.alpha},
                       {"order", ordering.order},
                       {"scores", ordering.scores}};
      if (order_out.empty()) {
        std::cout << j.dump() << "\n";
      } else {
        std::ofstream out(order_out);
        if (!out) throw IoError("cannot open " + order_out + " for writing");
        out << j.dump() << "\n";
      }
    } else if (*eval_cmd) {
      GnnModel model = load_model_file(eval_model);
      Dataset ds = load_dataset_ndjson(eval_data);
      const OrderingMode mode =
          eval_mode == "pruning" ? OrderingMode::pruning : OrderingMode::activation;
      if (eval_mode != "pruning" && eval_mode != "activation")
        throw ArgumentError("eval: unknown mode \"" + eval_mode + "\"");
      const LrpConfig lrp = eval_flags.lrp();
      const std::size_t n = std::min(eval_max_graphs, ds.graphs.size());

      std::vector<NodeOrdering> orderings(n);
      std::vector<CurveMetrics> metrics(n);
      cli_detail::run_indexed(n, eval_parallel, [&](std::size_t i) {
        const Graph& g = ds.graphs[i];
        orderings[i] = greedy_order(model, g, lrp, mode);
        metrics[i] = mode == OrderingMode::activation ? auac(model, g, orderings[i])
                                                      : aupc(model, g, orderings[i]);
      });

      std::ofstream out(eval_out);
      if (!out) throw IoError("cannot open " + eval_out + " for writing");
      out << "graph_id,mode,alpha,auac,aupc\n";
      double mean_metric = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        out << i << "," << to_string(mode) << "," << lrp.alpha << ",";
        if (metrics[i].auac) out << *metrics[i].auac;
        out << ",";
        if (metrics[i].aupc) out << *metrics[i].aupc;
        out << "\n";
        mean_metric += metrics[i].auac ? *metrics[i].auac : *metrics[i].aupc;
      }
      mean_metric /= n == 0 ? 1.0 : static_cast<double>(n);

      nlohmann::json j{{"mode", to_string(mode)},
                       {"alpha", lrp.alpha},
                       {"n_graphs", n},
                       {mode == OrderingMode::activation ? "mean_auac" : "mean_aupc", mean_metric},
                       {"out", eval_out}};
      bool have_motifs = n > 0;
      for (std::size_t i = 0; i < n; ++i)
        if (!ds.graphs[i].motif_nodes) have_motifs = false;
      if (have_motifs) {
        std::vector<NodeSet> truth;
        for (std::size_t i = 0; i < n; ++i) truth.push_back(*ds.graphs[i].motif_nodes);
        MotifDetectionResult det = motif_detection(orderings, truth);
        j["motif_accuracy"] = det.accuracy;
        j["motif_auroc"] = det.auroc;
      }
      std::cout << j.dump() << "\n";
    } else if (*bench_cmd) {
      Dataset ds = load_dataset_ndjson(bench_data);
      BenchConfig bc;
      bc.depths = cli_detail::parse_size_list(bench_depths);
      bc.sizes = cli_detail::parse_size_list(bench_sizes);
      bc.methods = cli_detail::split_csv(bench_methods);
      bc.repeats = bench_repeats;
      bc.max_graphs = bench_graphs;
      bc.walk_budget = cli_detail::walk_budget_from_env();
      bc.time_cap_seconds = bench_time_cap;
      bc.seed = bench_flags.seed;
      bc.lrp = bench_flags.lrp();
      std::map<std::size_t, GnnModel> models;
      for (std::size_t depth : bc.depths) {
        ModelInit init;
        init.kind = bench_kind == "gcn" ? BlockKind::gcn : BlockKind::gin;
        init.depth = depth;
        init.input_dim = ds.feature_dim;
        init.hidden_dim = bench_hidden;
        Rng rng(bench_flags.seed + depth);
        models.emplace(depth, make_model(init, rng));
      }
      BenchSweepResult sweep = bench_sweep(ds, models, bc);
      std::ofstream out(bench_out);
      if (!out) throw IoError("cannot open " + bench_out + " for writing");
      write_bench_csv(sweep.cells, out);
      nlohmann::json j{{"cells", sweep.cells.size()}, {"out", bench_out}};
      std::cout << j.dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace walkprop
