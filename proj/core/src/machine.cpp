#include "dgr/machine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace dgr {

int MachineSpec::node_state_id(const std::string& name) const {
  for (int i = 0; i < node_state_count(); ++i)
    if (node_states[i] == name) return i;
  throw std::invalid_argument("unknown node state: " + name);
}
int MachineSpec::edge_state_id(const std::string& name) const {
  for (int i = 0; i < edge_state_count(); ++i)
    if (edge_states[i] == name) return i;
  throw std::invalid_argument("unknown edge state: " + name);
}
int MachineSpec::channel_id(const std::string& name) const {
  for (int i = 0; i < channel_count(); ++i)
    if (channels[i] == name) return i;
  throw std::invalid_argument("unknown channel: " + name);
}

GraphView::GraphView(const Graph& graph) : g(&graph) {
  in_edges = graph.in_edges();
  reverse_edge = graph.reverse_edge_index();
}

namespace {

using Classes = std::vector<AttnClass>;

TuplePat tp(int s, int e, int b) { return TuplePat{s, e, b}; }
AttnClass cls(std::initializer_list<TuplePat> ts) { return AttnClass{ts}; }

// ---------------------------------------------------------------------------
// BFS: parallel flood. fresh nodes adopt the smallest-index visited
// neighbor; the adopted edge turns into a tree pointer.
MachineSpec make_bfs() {
  MachineSpec m;
  m.task = TaskId::bfs;
  m.node_states = {"fresh", "visited"};
  m.edge_states = {"plain", "tree"};
  m.heads = {{"index", ChannelSide::node, Direction::min}};
  m.channels = {"index"};
  const int F = 0, V = 1, P = 0, T = 1;
  m.rankings = {
      /*fresh*/ {{cls({tp(V, P, 1)}), cls({tp(F, P, kAny)})}},
      /*visited*/ {{cls({tp(V, T, 1)})}},
  };
  m.node_rules = {
      {F, {V}, V},
      {F, {kAny}, F},
      {V, {kAny}, V},
  };
  m.edge_rules = {
      {T, kAny, kAny, {kAny}, {kAny}, T},
      {P, V, F, {1}, {kAny}, T},
      {P, kAny, kAny, {kAny}, {kAny}, P},
  };
  // index is compared, never rewritten
  m.node_gates = {{{0, 1, 0}, {0, 1, 0}}};
  m.edge_gates = {{{0, kAny, kAny}, {0, kAny, kAny}}};
  return m;
}

// ---------------------------------------------------------------------------
// DFS: a single head walks the graph. Discovery takes a mark step (the
// active node selects its smallest undiscovered neighbor; both edge
// directions are stamped) and a move step (the child activates through its
// fresh tree edge). Finishing takes a done step and a wake step (the parent
// reactivates through the child's retreat edge, which is then retired).
MachineSpec make_dfs() {
  MachineSpec m;
  m.task = TaskId::dfs;
  m.node_states = {"undiscovered", "on_stack", "active", "done"};
  m.edge_states = {"plain", "tree", "retreat"};
  m.heads = {{"index", ChannelSide::node, Direction::min}};
  m.channels = {"index"};
  const int U = 0, S = 1, A = 2, D = 3;
  const int P = 0, T = 1, R = 2;
  m.rankings = {
      /*undiscovered*/ {{cls({tp(S, T, 1)}), cls({tp(A, P, 1)}), cls({tp(U, P, kAny)})}},
      /*on_stack*/ {{cls({tp(D, R, 1)}), cls({tp(S, T, 1)})}},
      /*active*/ {{cls({tp(U, P, 1)}), cls({tp(A, P, 1), tp(A, T, 1)})}},
      /*done*/ {{cls({tp(S, T, 1), tp(A, T, 1), tp(D, T, 1)})}},
  };
  m.node_rules = {
      {U, {S}, A},  // reachable only through the freshly stamped tree edge
      {U, {kAny}, U},
      {S, {D}, A},  // wake on the retiring retreat edge
      {S, {kAny}, S},
      {A, {U}, S},  // mark step: step back while the child edge is stamped
      {A, {kAny}, D},
      {D, {kAny}, D},
  };
  m.edge_rules = {
      {T, kAny, kAny, {kAny}, {kAny}, T},
      {R, D, S, {1}, {1}, P},  // retire the used retreat edge at the wake step
      {R, kAny, kAny, {kAny}, {kAny}, R},
      {P, A, U, {1}, {1}, T},  // both directions selected: parent -> child
      {P, U, A, {1}, {1}, R},  // child -> parent return edge
      {P, kAny, kAny, {kAny}, {kAny}, P},
  };
  m.node_gates = {{{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}}};
  m.edge_gates = {{{0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}}};
  return m;
}

// ---------------------------------------------------------------------------
// Shared skeleton for the two tree-growing tasks. The virtual hub runs a
// global extract-min over frontier keys carried on node scalars; adopted
// nodes pulse for one step so offers and candidate edges update, and the hub
// holds two steps so keys re-settle before the next selection.
MachineSpec make_tree_growth(TaskId task) {
  MachineSpec m;
  m.task = task;
  m.node_states = {"unreached", "frontier", "pulse", "in_tree",
                   "hub_scan", "hub_hold1", "hub_hold2"};
  m.edge_states = {"plain", "candidate", "tree", "virtual", "chosen"};
  const std::string key = task == TaskId::sp ? "dist" : "weight";
  m.heads = {{key, ChannelSide::edge, Direction::min},
             {key, ChannelSide::node, Direction::min}};
  m.channels = task == TaskId::sp ? std::vector<std::string>{"dist", "weight", "index"}
                                  : std::vector<std::string>{"weight", "index"};
  const int U = 0, F = 1, PU = 2, T = 3, GS = 4, G1 = 5, G2 = 6;
  const int P = 0, C = 1, TR = 2, VI = 3, CH = 4;
  // heads: 0 = edge-valued selector, 1 = node-valued selector (hub + commit)
  m.rankings = {
      /*U */ {{cls({tp(PU, P, 1)}), cls({tp(U, P, kAny)})},
              {cls({tp(PU, P, 1)}), cls({tp(U, P, kAny)})}},
      /*F */ {{cls({tp(T, C, 1)})},
              {cls({tp(GS, CH, 1)}), cls({tp(PU, P, 1)}), cls({tp(F, P, kAny)})}},
      /*PU*/ {{cls({tp(T, C, 1)}), cls({tp(PU, TR, 1)})},
              {cls({tp(T, C, 1)}), cls({tp(PU, TR, 1)})}},
      /*T */ {{cls({tp(T, TR, 1)})}, {cls({tp(T, TR, 1)})}},
      /*GS*/ {{cls({tp(GS, VI, 1), tp(GS, CH, 1)})},
              {cls({tp(PU, VI, kAny)}), cls({tp(F, VI, 1)}),
               cls({tp(GS, VI, 1), tp(GS, CH, 1)})}},
      /*G1*/ {{cls({tp(G1, VI, 1), tp(G1, CH, 1)})},
              {cls({tp(G1, VI, 1), tp(G1, CH, 1)})}},
      /*G2*/ {{cls({tp(G2, VI, 1), tp(G2, CH, 1)})},
              {cls({tp(G2, VI, 1), tp(G2, CH, 1)})}},
  };
  m.node_rules = {
      {U, {PU, PU}, F},
      {U, {kAny, kAny}, U},
      {F, {T, GS}, PU},  // selected by the hub
      {F, {kAny, kAny}, F},
      {PU, {kAny, kAny}, T},
      {T, {kAny, kAny}, T},
      {GS, {kAny, PU}, G1},  // a pulse is in flight: hold until keys settle
      {GS, {kAny, kAny}, GS},
      {G1, {kAny, kAny}, G2},
      {G2, {kAny, kAny}, GS},
  };
  m.edge_rules = {
      {TR, kAny, kAny, {kAny, kAny}, {kAny, kAny}, TR},
      // hub -> node edges become "chosen" exactly while the hub's selector
      // head sits on the reverse edge
      {VI, GS, kAny, {kAny, kAny}, {kAny, 1}, CH},
      {VI, G1, kAny, {kAny, kAny}, {kAny, 1}, CH},
      {VI, G2, kAny, {kAny, kAny}, {kAny, 1}, CH},
      {VI, kAny, kAny, {kAny, kAny}, {kAny, kAny}, VI},
      {CH, kAny, kAny, {kAny, kAny}, {kAny, 1}, CH},
      {CH, kAny, kAny, {kAny, kAny}, {kAny, kAny}, VI},
      // candidate lifecycle
      {C, kAny, kAny, {1, 1}, {kAny, kAny}, TR},   // committed at the pulse step
      {C, kAny, kAny, {1, 0}, {kAny, kAny}, C},    // still the receiver's best offer
      {C, kAny, kAny, {0, kAny}, {kAny, kAny}, P},  // lost the comparison
      // offer marking around a pulsing node
      {P, PU, kAny, {1, 1}, {kAny, kAny}, C},  // first offer to an unreached node
      {P, PU, kAny, {0, 1}, {kAny, kAny}, C},  // extra offer to a frontier node
      {P, kAny, kAny, {kAny, kAny}, {kAny, kAny}, P},
  };
  const GateTriple zero{0, kAny, kAny};
  if (task == TaskId::sp) {
    m.node_gates = {
        // dist: frontier keys refresh from the unique candidate each step;
        // the pulse step broadcasts the settled distance onto out-edges
        {{0, kAny, kAny}, {0, 0, 0}, {0, 0, 1}, {0, 1, 0}, zero, zero, zero},
        // weight (static input, node side unused)
        {zero, zero, zero, zero, zero, zero, zero},
        // index
        {{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}, zero, zero, zero},
    };
    m.edge_gates = {
        // dist over {plain, candidate, tree, virtual, chosen}
        {{0, 1, 0}, {0, 1, 1}, {0, 1, 0}, {0, 0, 0}, {0, kAny, kAny}},
        // weight
        {{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, kAny, kAny}, {0, kAny, kAny}},
        // index
        {{0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}},
    };
  } else {
    m.node_gates = {
        // weight: frontier keys refresh from the candidate; nothing is pushed
        {{0, kAny, kAny}, {0, 0, 0}, {0, 0, 0}, {0, 1, 0}, zero, zero, zero},
        // index
        {{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}, zero, zero, zero},
    };
    m.edge_gates = {
        // weight
        {{0, 1, 0}, {0, 1, 1}, {0, 1, 0}, {0, kAny, 0}, {0, kAny, kAny}},
        // index
        {{0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}},
    };
  }
  return m;
}

// ---------------------------------------------------------------------------
// MIS: the hub repeatedly selects the globally smallest-priority undecided
// node; it joins the set and its neighbors drop out. With distinct
// priorities this reproduces the fixed point of min-priority rounds.
MachineSpec make_mis() {
  MachineSpec m;
  m.task = TaskId::mis;
  m.node_states = {"undecided", "in_set", "excluded", "hub_scan", "hub_hold1", "hub_hold2"};
  m.edge_states = {"plain", "virtual", "chosen"};
  m.heads = {{"priority", ChannelSide::node, Direction::min}};
  m.channels = {"priority"};
  const int U = 0, S = 1, X = 2, GS = 3, G1 = 4, G2 = 5;
  const int P = 0, VI = 1, CH = 2;
  m.rankings = {
      /*U */ {{cls({tp(G1, CH, 1)}), cls({tp(S, P, kAny)}), cls({tp(U, P, kAny)})}},
      /*S */ {{cls({tp(S, P, 1)})}},
      /*X */ {{cls({tp(S, P, kAny)})}},
      /*GS*/ {{cls({tp(U, VI, 1)}), cls({tp(GS, VI, 1), tp(GS, CH, 1)})}},
      /*G1*/ {{cls({tp(G1, VI, 1), tp(G1, CH, 1)})}},
      /*G2*/ {{cls({tp(G2, VI, 1), tp(G2, CH, 1)})}},
  };
  m.node_rules = {
      {U, {G1}, S},  // the hub's pick joins
      {U, {S}, X},   // a neighbor joined: drop out
      {U, {kAny}, U},
      {S, {kAny}, S},
      {X, {kAny}, X},
      {GS, {U}, G1},
      {GS, {kAny}, GS},
      {G1, {kAny}, G2},
      {G2, {kAny}, GS},
  };
  m.edge_rules = {
      {VI, GS, kAny, {kAny}, {1}, CH},
      {VI, G1, kAny, {kAny}, {1}, CH},
      {VI, G2, kAny, {kAny}, {1}, CH},
      {VI, kAny, kAny, {kAny}, {kAny}, VI},
      {CH, kAny, kAny, {kAny}, {1}, CH},
      {CH, kAny, kAny, {kAny}, {kAny}, VI},
      {P, kAny, kAny, {kAny}, {kAny}, P},
  };
  m.node_gates = {{{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}}};
  m.edge_gates = {{{0, kAny, 0}, {0, kAny, kAny}, {0, kAny, kAny}}};
  return m;
}

// ---------------------------------------------------------------------------
// Eccentricity: the BFS flood plus a virtual node counting rounds while any
// node is still fresh. The final count (minus the initial round) is the
// eccentricity of the start node.
MachineSpec make_ecc() {
  MachineSpec m;
  m.task = TaskId::ecc;
  m.node_states = {"fresh", "visited", "counting", "halted"};
  m.edge_states = {"plain", "tree", "virtual"};
  m.heads = {{"index", ChannelSide::node, Direction::min}};
  m.channels = {"index", "rounds"};
  const int F = 0, V = 1, CN = 2, H = 3;
  const int P = 0, T = 1, VI = 2;
  m.rankings = {
      /*fresh*/ {{cls({tp(V, P, 1)}), cls({tp(F, P, kAny)})}},
      /*visited*/ {{cls({tp(V, T, 1)})}},
      /*counting*/ {{cls({tp(F, VI, kAny)}), cls({tp(V, VI, kAny)})}},
      /*halted*/ {{cls({tp(V, VI, kAny)})}},
  };
  m.node_rules = {
      {F, {V}, V},
      {F, {kAny}, F},
      {V, {kAny}, V},
      {CN, {F}, CN},
      {CN, {V}, H},
      {H, {kAny}, H},
  };
  m.edge_rules = {
      {T, kAny, kAny, {kAny}, {kAny}, T},
      {VI, kAny, kAny, {kAny}, {kAny}, VI},
      {P, V, F, {1}, {kAny}, T},
      {P, kAny, kAny, {kAny}, {kAny}, P},
  };
  m.node_gates = {
      // index
      {{0, 1, 0}, {0, 1, 0}, {0, kAny, kAny}, {0, kAny, kAny}},
      // rounds: the counting hub adds one per step and freezes when halted
      {{0, kAny, kAny}, {0, kAny, kAny}, {1, 1, 0}, {0, 1, 0}},
  };
  m.edge_gates = {
      {{0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}},
      {{0, kAny, kAny}, {0, kAny, kAny}, {0, kAny, kAny}},
  };
  return m;
}

}  // namespace

const MachineSpec& machine_spec(TaskId task) {
  static const MachineSpec bfs = make_bfs();
  static const MachineSpec dfs = make_dfs();
  static const MachineSpec sp = make_tree_growth(TaskId::sp);
  static const MachineSpec prim = make_tree_growth(TaskId::prim);
  static const MachineSpec mis = make_mis();
  static const MachineSpec ecc = make_ecc();
  switch (task) {
    case TaskId::bfs: return bfs;
    case TaskId::dfs: return dfs;
    case TaskId::sp: return sp;
    case TaskId::prim: return prim;
    case TaskId::mis: return mis;
    case TaskId::ecc: return ecc;
  }
  throw std::logic_error("bad task");
}

StepState encode_inputs(const Graph& g, TaskId task) {
  const MachineSpec& m = machine_spec(task);
  g.validate();
  if (task_is_rooted(task) && !g.start_node)
    throw std::invalid_argument("task requires a start node");
  if (task_uses_virtual_node(task) && !g.virtual_node)
    throw std::invalid_argument("task requires a virtual node");
  const int n = g.node_count;
  const int ne = g.edge_count();
  StepState s;
  s.node_state.assign(n, 0);
  s.edge_state.assign(ne, 0);
  s.node_values.assign(m.channel_count(), std::vector<double>(n, 0.0));
  s.edge_values.assign(m.channel_count(), std::vector<double>(ne, 0.0));
  for (int c = 0; c < m.channel_count(); ++c) {
    auto itn = g.node_scalars.find(m.channels[c]);
    if (itn != g.node_scalars.end()) s.node_values[c] = itn->second;
    auto ite = g.edge_scalars.find(m.channels[c]);
    if (ite != g.edge_scalars.end()) s.edge_values[c] = ite->second;
  }
  auto loops = g.self_loop_index();
  const int vnode = g.virtual_node.value_or(-1);
  auto mark_virtual_edges = [&](int virtual_state) {
    for (int e = 0; e < ne; ++e)
      if (g.edges[e].sender == vnode || g.edges[e].receiver == vnode)
        s.edge_state[e] = virtual_state;
  };
  switch (task) {
    case TaskId::bfs: {
      s.node_state[*g.start_node] = m.node_state_id("visited");
      s.edge_state[loops[*g.start_node]] = m.edge_state_id("tree");
      break;
    }
    case TaskId::dfs: {
      s.node_state[*g.start_node] = m.node_state_id("active");
      s.edge_state[loops[*g.start_node]] = m.edge_state_id("tree");
      break;
    }
    case TaskId::sp:
    case TaskId::prim: {
      mark_virtual_edges(m.edge_state_id("virtual"));
      s.node_state[vnode] = m.node_state_id("hub_scan");
      s.node_state[*g.start_node] = m.node_state_id("pulse");
      s.edge_state[loops[*g.start_node]] = m.edge_state_id("tree");
      break;
    }
    case TaskId::mis: {
      mark_virtual_edges(m.edge_state_id("virtual"));
      s.node_state[vnode] = m.node_state_id("hub_scan");
      break;
    }
    case TaskId::ecc: {
      mark_virtual_edges(m.edge_state_id("virtual"));
      s.node_state[vnode] = m.node_state_id("counting");
      s.node_state[*g.start_node] = m.node_state_id("visited");
      s.edge_state[loops[*g.start_node]] = m.edge_state_id("tree");
      break;
    }
  }
  return s;
}

std::vector<std::uint8_t> select_best_bits(const MachineSpec& spec, const GraphView& gv,
                                           const StepState& s, int head) {
  const ScalarChannel& ch = spec.heads[head];
  return select_best_bits(gv, s, spec.channel_id(ch.name), ch.attachment, ch.direction);
}

std::vector<std::uint8_t> select_best_bits(const GraphView& gv, const StepState& s,
                                           int channel, ChannelSide side, Direction dir) {
  const Graph& g = *gv.g;
  const int c = channel;
  std::vector<std::uint8_t> bits(g.edge_count(), 0);
  auto priority = [&](int e) {
    return side == ChannelSide::node ? s.node_values[c][g.edges[e].sender]
                                     : s.edge_values[c][e];
  };
  for (int v = 0; v < g.node_count; ++v) {
    // groups keyed by (sender state, edge state)
    std::map<std::pair<int, int>, double> best;
    for (int e : gv.in_edges[v]) {
      std::pair<int, int> key{s.node_state[g.edges[e].sender], s.edge_state[e]};
      double p = priority(e);
      auto it = best.find(key);
      if (it == best.end())
        best[key] = p;
      else if (dir == Direction::min ? p < it->second : p > it->second)
        it->second = p;
    }
    for (int e : gv.in_edges[v]) {
      std::pair<int, int> key{s.node_state[g.edges[e].sender], s.edge_state[e]};
      if (priority(e) == best[key]) bits[e] = 1;
    }
  }
  return bits;
}

StepChoices reference_attention(const MachineSpec& spec, const GraphView& gv,
                                const StepState& s) {
  const Graph& g = *gv.g;
  StepChoices ch;
  ch.bits.resize(spec.head_count());
  ch.winner.assign(spec.head_count(), std::vector<int>(g.node_count, -1));
  for (int h = 0; h < spec.head_count(); ++h) ch.bits[h] = select_best_bits(spec, gv, s, h);
  for (int v = 0; v < g.node_count; ++v) {
    const auto& per_head = spec.rankings[s.node_state[v]];
    for (int h = 0; h < spec.head_count(); ++h) {
      for (const AttnClass& c : per_head[h]) {
        int pick = -1;
        for (int e : gv.in_edges[v]) {
          int su = s.node_state[g.edges[e].sender];
          int ee = s.edge_state[e];
          int b = ch.bits[h][e];
          for (const TuplePat& t : c.tuples)
            if (t.matches(su, ee, b)) {
              pick = e;
              break;
            }
          if (pick >= 0) break;
        }
        if (pick >= 0) {
          ch.winner[h][v] = pick;
          break;
        }
      }
      if (ch.winner[h][v] < 0)
        throw std::logic_error("machine design hole: no ranked tuple matches for receiver state " +
                               spec.node_states[s.node_state[v]] + " in task " +
                               task_name(spec.task));
    }
  }
  return ch;
}

int apply_node_rules(const MachineSpec& spec, int cur, const std::vector<int>& winners) {
  for (const NodeRule& r : spec.node_rules) {
    if (r.cur != kAny && r.cur != cur) continue;
    bool ok = true;
    for (int h = 0; h < spec.head_count(); ++h)
      if (r.winners[h] != kAny && r.winners[h] != winners[h]) {
        ok = false;
        break;
      }
    if (ok) return r.next;
  }
  throw std::logic_error("machine design hole: no node rule for state " +
                         spec.node_states[cur] + " in task " + task_name(spec.task));
}

int apply_edge_rules(const MachineSpec& spec, int edge_state, int sender_state,
                     int receiver_state, const std::vector<int>& fown,
                     const std::vector<int>& frev) {
  for (const EdgeRule& r : spec.edge_rules) {
    if (r.edge != kAny && r.edge != edge_state) continue;
    if (r.sender != kAny && r.sender != sender_state) continue;
    if (r.receiver != kAny && r.receiver != receiver_state) continue;
    bool ok = true;
    for (int h = 0; h < spec.head_count() && ok; ++h) {
      if (r.fown[h] != kAny && r.fown[h] != fown[h]) ok = false;
      if (r.frev[h] != kAny && r.frev[h] != frev[h]) ok = false;
    }
    if (ok) return r.next;
  }
  throw std::logic_error(std::string("machine design hole: no edge rule in task ") +
                         task_name(spec.task));
}

StepState machine_step(const MachineSpec& spec, const GraphView& gv, const StepState& s,
                       const StepChoices& ch) {
  const Graph& g = *gv.g;
  const int H = spec.head_count();
  StepState next = s;

  std::vector<int> winners(H);
  for (int v = 0; v < g.node_count; ++v) {
    for (int h = 0; h < H; ++h) winners[h] = s.node_state[g.edges[ch.winner[h][v]].sender];
    next.node_state[v] = apply_node_rules(spec, s.node_state[v], winners);
  }

  std::vector<int> fown(H), frev(H);
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edges[e];
    const int rev = gv.reverse_edge[e];
    for (int h = 0; h < H; ++h) {
      fown[h] = ch.winner[h][ed.receiver] == e ? 1 : 0;
      frev[h] = (rev >= 0 && ch.winner[h][ed.sender] == rev) ? 1 : 0;
    }
    next.edge_state[e] =
        apply_edge_rules(spec, s.edge_state[e], s.node_state[ed.sender],
                         s.node_state[ed.receiver], fown, frev);
  }

  auto bit = [](int gate) { return gate == 1 ? 1.0 : 0.0; };
  for (int c = 0; c < spec.channel_count(); ++c) {
    const auto& ng = spec.node_gates[c];
    const auto& eg = spec.edge_gates[c];
    for (int v = 0; v < g.node_count; ++v) {
      const GateTriple& gt = ng[s.node_state[v]];
      double acc = bit(gt.inc) + bit(gt.keep) * s.node_values[c][v];
      for (int e : gv.in_edges[v]) acc += bit(eg[s.edge_state[e]].push) * s.edge_values[c][e];
      next.node_values[c][v] = acc;
    }
    for (int e = 0; e < g.edge_count(); ++e) {
      const GateTriple& gt = eg[s.edge_state[e]];
      next.edge_values[c][e] = bit(gt.inc) + bit(gt.keep) * s.edge_values[c][e] +
                               bit(ng[s.node_state[g.edges[e].sender]].push) *
                                   s.node_values[c][g.edges[e].sender];
    }
  }
  return next;
}

}  // namespace dgr
