#include "dgr/eval.hpp"

#include <sstream>

#include "dgr/ablation.hpp"
#include "dgr/processor.hpp"
#include "dgr/util.hpp"

namespace dgr {

StepState nohint_encode(const Graph& g, TaskId task, int k_nodes, int k_edges) {
  StepState ref = encode_inputs(g, task);  // scalar channels and shapes
  StepState s = ref;
  s.node_state.assign(g.node_count, 0);
  s.edge_state.assign(g.edge_count(), 0);
  (void)k_edges;
  if (k_nodes >= 2 && task_is_rooted(task) && g.start_node) {
    s.node_state[*g.start_node] = 1;
    s.edge_state[g.self_loop_index()[*g.start_node]] = 1;
  }
  return s;
}

TaskOutput nohint_decode(const StepState& final, const Graph& g) {
  TaskOutput out;
  const int n = real_node_count(g);
  out.parents.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    int parent = -1, count = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
      if (g.edges[e].receiver != v || final.edge_state[e] != 1) continue;
      ++count;
      parent = g.edges[e].sender;
    }
    if (count == 1)
      out.parents[v] = parent;
    else
      out.malformed_nodes.push_back(v);
  }
  return out;
}

TaskOutput predict_outputs(const ModelParams& mp, TaskId task, const Graph& g) {
  const int T = reference_step_count(task, g);
  if (mp.variant == "ndsu") return ndsu_predict_outputs(mp, task, g, T);
  if (!mp.hard_aggregation) {
    auto res = soft_infer_rollout(mp, task, g, T, /*tau=*/1.0);
    return decode_outputs(res.steps.back(), g, task);
  }
  NetTables nt = extract_tables(mp, task);
  auto steps = hard_rollout(nt, g, T);
  const MachineSpec& m = machine_spec(task);
  if (nt.k_nodes != m.node_state_count() || nt.k_edges != m.edge_state_count())
    return nohint_decode(steps.back(), g);
  return decode_outputs(steps.back(), g, task);
}

EvalReport evaluate(const ModelParams& mp, TaskId task, const std::vector<int>& sizes,
                    int n_graphs, std::uint64_t seed) {
  if (!mp.covers(task)) throw std::invalid_argument("evaluate: model does not cover this task");
  EvalReport rep;
  rep.task = task;
  rep.seed = seed;
  // reuse one table extraction across graphs
  NetTables nt;
  bool table_mode = mp.hard_aggregation && mp.variant == "standard";
  if (table_mode) nt = extract_tables(mp, task);
  const MachineSpec& m = machine_spec(task);
  const bool latent =
      table_mode && (nt.k_nodes != m.node_state_count() || nt.k_edges != m.edge_state_count());

  for (int size : sizes) {
    EvalReport::PerSize ps;
    ps.size = size;
    ps.n_graphs = n_graphs;
    double node_sum = 0.0;
    int graph_ok = 0;
    for (int i = 0; i < n_graphs; ++i) {
      Graph g = make_task_instance(task, size, mix_seed(seed, size * 10000 + i));
      HintTrajectory ref = run_reference(task, g);
      TaskOutput pred;
      if (table_mode) {
        auto steps = hard_rollout(nt, g, ref.step_count());
        pred = latent ? nohint_decode(steps.back(), g) : decode_outputs(steps.back(), g, task);
      } else {
        pred = predict_outputs(mp, task, g);
      }
      auto [correct, total] = score_outputs(pred, ref.outputs, task);
      node_sum += total > 0 ? static_cast<double>(correct) / total : 1.0;
      if (correct == total) ++graph_ok;
    }
    ps.node_level = task == TaskId::ecc ? -1.0 : node_sum / n_graphs;
    ps.graph_level = static_cast<double>(graph_ok) / n_graphs;
    rep.sizes.push_back(ps);
  }
  return rep;
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << "task " << task_name(task) << " (node-level / graph-level, percent)\n";
  for (const auto& ps : sizes) {
    out << "  size " << ps.size << ": ";
    if (ps.node_level < 0)
      out << "NA";
    else
      out << ps.node_level * 100.0;
    out << " / " << ps.graph_level * 100.0 << "  (" << ps.n_graphs << " graphs)\n";
  }
  return out.str();
}

std::string EvalReport::records() const {
  std::ostringstream out;
  for (const auto& ps : sizes)
    out << "task=" << task_name(task) << " size=" << ps.size << " n=" << ps.n_graphs
        << " node_level=" << ps.node_level << " graph_level=" << ps.graph_level
        << " seed=" << seed << "\n";
  return out.str();
}

void dump_trace(const ModelParams& mp, TaskId task, const Graph& g, const std::string& path) {
  const int T = reference_step_count(task, g);
  NetTables nt = extract_tables(mp, task);
  HintTrajectory traj;
  traj.task = task;
  traj.steps = hard_rollout(nt, g, T);
  const MachineSpec& m = machine_spec(task);
  const bool latent = nt.k_nodes != m.node_state_count() || nt.k_edges != m.edge_state_count();
  traj.outputs =
      latent ? nohint_decode(traj.steps.back(), g) : decode_outputs(traj.steps.back(), g, task);
  std::ostringstream out;
  out << "graph n=" << g.node_count << " edges=" << g.edge_count();
  if (g.start_node) out << " start=" << *g.start_node;
  if (g.virtual_node) out << " virtual=" << *g.virtual_node;
  out << "\nedge_list";
  for (const auto& e : g.edges) out << ' ' << e.sender << '-' << e.receiver;
  out << "\n";
  if (latent) {
    // latent vocabularies have no task state names; dump numeric states
    out << "latent_states k_nodes=" << nt.k_nodes << " k_edges=" << nt.k_edges << "\n";
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      out << "step " << t << "\n  nodes";
      for (int v = 0; v < g.node_count; ++v) out << ' ' << traj.steps[t].node_state[v];
      out << "\n  edges";
      for (int e = 0; e < g.edge_count(); ++e) out << ' ' << traj.steps[t].edge_state[e];
      out << "\n";
    }
    if (!traj.outputs.parents.empty()) {
      out << "parents";
      for (int p : traj.outputs.parents) out << ' ' << p;
      out << "\n";
    }
  } else {
    out << format_trajectory(traj, g);
  }
  write_text_file(path, out.str());
}

}  // namespace dgr
