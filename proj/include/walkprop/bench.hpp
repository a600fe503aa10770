#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "walkprop/forward_hook.hpp"
#include "walkprop/lrp.hpp"
#include "walkprop/rng.hpp"

namespace walkprop {

// One timed attribution cell. Timing covers the attribution only: the
// propagation-matrix construction (the per-call LrpContext) is inside the
// clock, the forward trace is not.
struct BenchRecord {
  std::string method;
  std::size_t depth = 0;
  std::size_t subgraph_size = 0;
  double wall_time_ms = 0.0;  // median over repeats
  std::size_t repeats = 0;
  std::size_t graph_id = 0;
};

struct BenchCell {
  std::string method;
  std::size_t depth = 0;
  std::size_t subgraph_size = 0;
  double wall_time_ms_median = 0.0;
  std::size_t repeats = 0;
  std::size_t n_graphs = 0;
  bool failed = false;
};

struct BenchConfig {
  std::vector<std::size_t> depths;
  std::vector<std::size_t> sizes{5};
  std::vector<std::string> methods{"naive", "mp"};
  std::size_t repeats = 3;
  std::size_t max_graphs = 50;
  std::uint64_t walk_budget = kDefaultWalkBudget;
  double time_cap_seconds = 360.0;
  std::uint64_t seed = 0;
  LrpConfig lrp;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

struct BenchSweepResult {
  std::vector<BenchCell> cells;
  std::vector<BenchRecord> records;  // per-graph medians
};

// Sweeps (method x depth x subgraph size) over the first max_graphs graphs.
// Cells whose naive enumeration exceeds the walk budget, or that run past
// the time cap, are recorded as failed rather than raised.
inline BenchSweepResult bench_sweep(const Dataset& dataset,
                                    const std::map<std::size_t, GnnModel>& models,
                                    const BenchConfig& cfg) {
  using clock = std::chrono::steady_clock;
  BenchSweepResult out;
  const std::size_t n_graphs = std::min(cfg.max_graphs, dataset.graphs.size());

  for (const std::string& method : cfg.methods) {
    for (std::size_t depth : cfg.depths) {
      const auto model_it = models.find(depth);
      if (model_it == models.end())
        throw ArgumentError("bench_sweep: no model of depth " + std::to_string(depth));
      const GnnModel& model = model_it->second;
      for (std::size_t size : cfg.sizes) {
        BenchCell cell;
        cell.method = method;
        cell.depth = depth;
        cell.subgraph_size = size;
        cell.repeats = cfg.repeats;
        const auto cell_start = clock::now();
        std::vector<double> graph_medians;

        for (std::size_t gi = 0; gi < n_graphs && !cell.failed; ++gi) {
          const std::chrono::duration<double> elapsed = clock::now() - cell_start;
          if (elapsed.count() > cfg.time_cap_seconds) {
            cell.failed = true;
            break;
          }
          const Graph& g = dataset.graphs[gi];
          const std::size_t target = g.label ? static_cast<std::size_t>(*g.label) : 0;
          ForwardTrace trace = forward(model, g, target);

          // deterministic subgraph choice per (seed, graph)
          Rng rng(cfg.seed * 0x9e3779b97f4a7c15ull + gi);
          std::vector<std::size_t> all(g.num_nodes);
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
          rng.shuffle(all);
          all.resize(std::min<std::size_t>(size, g.num_nodes));
          const NodeSet subgraph(std::move(all));

          std::vector<double> times;
          times.reserve(cfg.repeats);
          bool graph_failed = false;
          for (std::size_t rep = 0; rep < cfg.repeats && !graph_failed; ++rep) {
            const auto t0 = clock::now();
            try {
              if (method == "naive") {
                LrpContext ctx = make_lrp_context(trace, model, cfg.lrp);
                subgraph_relevance_naive(ctx, subgraph, cfg.walk_budget);
              } else if (method == "mp") {
                LrpContext ctx = make_lrp_context(trace, model, cfg.lrp);
                if (cfg.lrp.alpha == 0.0)
                  subgraph_relevance_mp(ctx, subgraph);
                else
                  generalized_relevance_mp(ctx, subgraph);
              } else if (method == "forward_hook") {
                forward_hook_relevance(model, g, target, cfg.lrp, subgraph);
              } else if (method == "forward") {
                // the trace phase on its own, for comparison against the
                // attribution-only timings of the other methods
                forward(model, g, target);
              } else {
                throw ArgumentError("bench_sweep: unknown method \"" + method + "\"");
              }
            } catch (const BudgetError&) {
              graph_failed = true;
              break;
            }
            const std::chrono::duration<double, std::milli> dt = clock::now() - t0;
            times.push_back(dt.count());
          }
          if (graph_failed) {
            cell.failed = true;
            break;
          }
          BenchRecord rec;
          rec.method = method;
          rec.depth = depth;
          rec.subgraph_size = size;
          rec.wall_time_ms = detail::median(times);
          rec.repeats = cfg.repeats;
          rec.graph_id = gi;
          graph_medians.push_back(rec.wall_time_ms);
          out.records.push_back(std::move(rec));
        }

        cell.n_graphs = graph_medians.size();
        cell.wall_time_ms_median = cell.failed ? 0.0 : detail::median(graph_medians);
        out.cells.push_back(std::move(cell));
      }
    }
  }
  return out;
}

inline void write_bench_csv(const std::vector<BenchCell>& cells, std::ostream& os) {
  os << "method,L,subgraph_size,wall_time_ms_median,repeats,n_graphs,failed\n";
  for (const BenchCell& c : cells) {
    os << c.method << "," << c.depth << "," << c.subgraph_size << ",";
    if (c.failed)
      os << "";
    else
      os << c.wall_time_ms_median;
    os << "," << c.repeats << "," << c.n_graphs << "," << (c.failed ? 1 : 0) << "\n";
  }
}

}  // namespace walkprop
