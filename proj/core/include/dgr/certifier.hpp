#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgr/machine.hpp"
#include "dgr/model.hpp"
#include "dgr/processor.hpp"

namespace dgr {

// One reachable attention situation: a receiver state together with the set
// of (sender state, edge state, indicator bit) tuples present on its
// in-edges, per spec head, and the ground-truth next state.
struct AttnContext {
  int receiver = 0;
  std::vector<std::vector<TuplePat>> present;  // [spec head][tuples, sorted unique]
  int truth_next = 0;
};

// One reachable edge-update situation: edge and endpoint states, the
// ground-truth next edge state, plus how this edge sits inside both
// endpoints' attention contexts (enough to recompute any model's selection
// flags).
struct EdgeSituation {
  int edge_state = 0, sender_state = 0, receiver_state = 0;
  int truth_next = 0;
  int recv_ctx = -1, send_ctx = -1;        // indices into contexts
  std::vector<TuplePat> own_tuple;         // per spec head, as the receiver sees it
  std::vector<char> own_first;             // lowest-index among equal tuples
  std::vector<TuplePat> rev_tuple;         // reverse edge in the sender's view
  std::vector<char> rev_first;
};

// The machine-readable reference spec: every attention/transition situation
// reachable on a diverse bounded corpus, with ground-truth outcomes, plus
// the forced scalar-gate bits from the machine definition.
struct ReferenceTransitionSpec {
  TaskId task = TaskId::bfs;
  std::vector<AttnContext> contexts;
  std::vector<EdgeSituation> edges;
  // node/edge update tables under reference attention (for table realizers)
  std::map<std::vector<int>, int> node_entries;  // [cur, w0..wH-1] -> next
  std::map<std::vector<int>, int> edge_entries;  // [e, su, sv, fown.., frev..] -> next
};

ReferenceTransitionSpec build_transition_spec(TaskId task);

// Verifies that the masked view a network sees determines every collected
// update uniquely. Throws std::logic_error when two situations collide.
void check_spec_realizable(const ReferenceTransitionSpec& spec);

struct AssertionOutcome {
  std::string kind;  // "attention" | "node" | "edge" | "gate"
  std::string detail;
  double margin = 0.0;
  bool passed = false;
};

struct TransitionCertificate {
  TaskId task = TaskId::bfs;
  bool pass = false;
  std::string reject_reason;           // non-empty when certification is unsound
  std::vector<AssertionOutcome> assertions;
  std::uint32_t model_fingerprint = 0;
  int failed_count() const;
  std::string report() const;          // one stable line per assertion
};

// Checks a model's extracted tables against the reference spec: every
// reachable context must select a winner by a strict margin and land on the
// ground-truth next states; every forced gate bit must match.
TransitionCertificate check_assertions(const NetTables& nt,
                                       const ReferenceTransitionSpec& spec,
                                       double margin = 1e-4);

// Extract + check for a model that must cover `task`.
TransitionCertificate certify(const ModelParams& mp, TaskId task);

}  // namespace dgr
