#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/tasks.hpp"

namespace dgr {

constexpr int kAny = -1;

// One attention tuple as seen by a receiver: (sender node state, edge state,
// select-best indicator bit). bit may be kAny in patterns.
struct TuplePat {
  int sender = kAny;
  int edge = kAny;
  int bit = kAny;
  bool matches(int s, int e, int b) const {
    return (sender == kAny || sender == s) && (edge == kAny || edge == e) &&
           (bit == kAny || bit == b);
  }
  friend bool operator==(const TuplePat&, const TuplePat&) = default;
  friend auto operator<=>(const TuplePat&, const TuplePat&) = default;
};

// Tuples an attention head treats as interchangeable at one rank level.
struct AttnClass {
  std::vector<TuplePat> tuples;
};

// Node update rule: (current state, winner sender-state per head) -> next.
struct NodeRule {
  int cur = kAny;
  std::vector<int> winners;  // one per head; kAny matches any state
  int next = 0;
};

// Edge update rule over (edge state, endpoint states, per-head selection
// flags in both directions) -> next edge state.
struct EdgeRule {
  int edge = kAny;
  int sender = kAny;
  int receiver = kAny;
  std::vector<int> fown;  // per head; 0/1/kAny
  std::vector<int> frev;  // per head; 0/1/kAny
  int next = 0;
};

// Forced gate bits; kAny marks a bit the hint dynamics leave unconstrained
// (it only ever multiplies zero).
struct GateTriple {
  int inc = 0, keep = 0, push = 0;
};

// Complete discrete machine for one task: vocabulary, attention preferences,
// transition rules and scalar gate bits. Single source for the reference
// executor, the input encoder, the certifier's reference spec and the
// synthetic table-realizing model.
struct MachineSpec {
  TaskId task = TaskId::bfs;
  std::vector<std::string> node_states;
  std::vector<std::string> edge_states;
  std::vector<ScalarChannel> heads;    // per attention head
  std::vector<std::string> channels;   // scalar value stores (node+edge each)
  // rankings[receiver][head]: ordered preference classes. The reference
  // winner is the lowest-index edge matching the first non-empty class.
  std::vector<std::vector<std::vector<AttnClass>>> rankings;
  std::vector<NodeRule> node_rules;    // first match wins
  std::vector<EdgeRule> edge_rules;    // first match wins
  // gates[channel][state]
  std::vector<std::vector<GateTriple>> node_gates;
  std::vector<std::vector<GateTriple>> edge_gates;

  int node_state_count() const { return static_cast<int>(node_states.size()); }
  int edge_state_count() const { return static_cast<int>(edge_states.size()); }
  int head_count() const { return static_cast<int>(heads.size()); }
  int channel_count() const { return static_cast<int>(channels.size()); }
  int node_state_id(const std::string& name) const;
  int edge_state_id(const std::string& name) const;
  int channel_id(const std::string& name) const;
};

const MachineSpec& machine_spec(TaskId task);

// Discrete configuration plus scalar channel values at one execution step.
struct StepState {
  std::vector<int> node_state;
  std::vector<int> edge_state;
  std::vector<std::vector<double>> node_values;  // [channel][node]
  std::vector<std::vector<double>> edge_values;  // [channel][edge]
  friend bool operator==(const StepState&, const StepState&) = default;
};

// Static per-graph index structures shared by the executor and processor.
struct GraphView {
  const Graph* g = nullptr;
  std::vector<std::vector<int>> in_edges;  // per receiver, ascending edge id
  std::vector<int> reverse_edge;           // -1 when absent
  explicit GraphView(const Graph& graph);
};

// Step-0 state: direct categorical assignment per task plus channel values
// copied from the graph's scalars.
StepState encode_inputs(const Graph& g, TaskId task);

// Select-best indicator bits for one head: for each receiver and each
// (sender state, edge state) group among its in-edges, 1 on every edge
// attaining the group optimum of the head's scalar.
std::vector<std::uint8_t> select_best_bits(const MachineSpec& spec, const GraphView& gv,
                                           const StepState& s, int head);
std::vector<std::uint8_t> select_best_bits(const GraphView& gv, const StepState& s,
                                           int channel, ChannelSide side, Direction dir);

// Reference attention: winner edge per (head, node) under spec.rankings.
// Throws if no ranked class matches (a machine design hole).
struct StepChoices {
  std::vector<std::vector<std::uint8_t>> bits;  // [head][edge]
  std::vector<std::vector<int>> winner;         // [head][node] -> edge id
};
StepChoices reference_attention(const MachineSpec& spec, const GraphView& gv,
                                const StepState& s);

// One machine step under the reference rules (states and scalars).
StepState machine_step(const MachineSpec& spec, const GraphView& gv, const StepState& s,
                       const StepChoices& ch);

int apply_node_rules(const MachineSpec& spec, int cur, const std::vector<int>& winners);
int apply_edge_rules(const MachineSpec& spec, int edge_state, int sender_state,
                     int receiver_state, const std::vector<int>& fown,
                     const std::vector<int>& frev);

}  // namespace dgr
