#include "dgr/reference.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dgr {

int real_node_count(const Graph& g) {
  return g.virtual_node ? g.node_count - 1 : g.node_count;
}

TaskOutput decode_outputs(const StepState& final, const Graph& g, TaskId task) {
  const MachineSpec& m = machine_spec(task);
  const int n = real_node_count(g);
  TaskOutput out;
  if (task == TaskId::mis) {
    const int in_set = m.node_state_id("in_set");
    out.in_set.resize(n);
    for (int v = 0; v < n; ++v) out.in_set[v] = final.node_state[v] == in_set ? 1 : 0;
    return out;
  }
  if (task == TaskId::ecc) {
    const int rounds = m.channel_id("rounds");
    out.eccentricity =
        static_cast<int>(std::lround(final.node_values[rounds][*g.virtual_node])) - 1;
    return out;
  }
  const int tree = m.edge_state_id("tree");
  out.parents.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    int parent = -1;
    int count = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
      if (g.edges[e].receiver != v || final.edge_state[e] != tree) continue;
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

HintTrajectory run_reference(TaskId task, const Graph& g) {
  const MachineSpec& m = machine_spec(task);
  GraphView gv(g);
  HintTrajectory traj;
  traj.task = task;
  StepState s = encode_inputs(g, task);
  traj.steps.push_back(s);
  const int max_steps = 8 * g.node_count + 32;
  for (int t = 0; t < max_steps; ++t) {
    StepChoices ch = reference_attention(m, gv, s);
    StepState next = machine_step(m, gv, s, ch);
    if (next == s) {
      if (traj.steps.size() == 1) traj.steps.push_back(next);  // 1-step fixed point
      break;
    }
    traj.steps.push_back(next);
    s = std::move(next);
    if (t + 1 == max_steps)
      throw std::logic_error("reference executor did not reach a fixed point");
  }
  traj.outputs = decode_outputs(traj.steps.back(), g, task);
  return traj;
}

int reference_step_count(TaskId task, const Graph& g) {
  return run_reference(task, g).step_count();
}

std::pair<int, int> score_outputs(const TaskOutput& pred, const TaskOutput& ref, TaskId task) {
  if (task == TaskId::ecc)
    return {pred.eccentricity == ref.eccentricity ? 1 : 0, 1};
  if (task == TaskId::mis) {
    int correct = 0;
    for (std::size_t v = 0; v < ref.in_set.size(); ++v)
      if (v < pred.in_set.size() && pred.in_set[v] == ref.in_set[v]) ++correct;
    return {correct, static_cast<int>(ref.in_set.size())};
  }
  int correct = 0;
  for (std::size_t v = 0; v < ref.parents.size(); ++v)
    if (v < pred.parents.size() && pred.parents[v] >= 0 && pred.parents[v] == ref.parents[v])
      ++correct;
  return {correct, static_cast<int>(ref.parents.size())};
}

std::string format_trajectory(const HintTrajectory& traj, const Graph& g) {
  const MachineSpec& m = machine_spec(traj.task);
  std::ostringstream out;
  out << "task " << task_name(traj.task) << " n " << g.node_count << " steps "
      << traj.step_count() << "\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StepState& s = traj.steps[t];
    out << "step " << t << "\n";
    out << "  nodes";
    for (int v = 0; v < g.node_count; ++v) out << ' ' << m.node_states[s.node_state[v]];
    out << "\n  edges";
    for (int e = 0; e < g.edge_count(); ++e) out << ' ' << m.edge_states[s.edge_state[e]];
    out << "\n";
    for (int c = 0; c < m.channel_count(); ++c) {
      out << "  " << m.channels[c] << ".node";
      for (double v : s.node_values[c]) out << ' ' << v;
      out << "\n  " << m.channels[c] << ".edge";
      for (double v : s.edge_values[c]) out << ' ' << v;
      out << "\n";
    }
  }
  const TaskOutput& o = traj.outputs;
  if (!o.parents.empty()) {
    out << "parents";
    for (int p : o.parents) out << ' ' << p;
    out << "\n";
  }
  if (!o.in_set.empty()) {
    out << "in_set";
    for (int b : o.in_set) out << ' ' << int(b);
    out << "\n";
  }
  if (o.eccentricity >= 0) out << "eccentricity " << o.eccentricity << "\n";
  return out.str();
}

}  // namespace dgr
