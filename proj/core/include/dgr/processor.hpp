#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgr/machine.hpp"
#include "dgr/model.hpp"
#include "dgr/reference.hpp"
#include "dgr/tensor.hpp"

namespace dgr {

// ---------------------------------------------------------------------------
// Differentiable (train-soft) path

template <typename Real>
struct ParamLeavesT {
  std::map<std::string, TensorRef<Real>> leaves;
  TensorRef<Real> at(const std::string& name) const {
    auto it = leaves.find(name);
    if (it == leaves.end()) throw std::invalid_argument("missing parameter leaf: " + name);
    return it->second;
  }
};

template <typename Real>
ParamLeavesT<Real> lift_params(TapeT<Real>& tape, const ModelParams& mp, bool needs_grad);

// After backward(), adds each leaf's gradient into grads (ordered like
// mp.blocks).
template <typename Real>
void harvest_grads(const TapeT<Real>& tape, const ParamLeavesT<Real>& leaves,
                   const ModelParams& mp, std::vector<std::vector<float>>& grads);

template <typename Real>
struct HintLossParts {
  TensorRef<Real> node_ce, edge_ce, scalar_mse, parent_ce;  // parent_ce.idx < 0 when absent
  TensorRef<Real> total;
};

// Teacher-forced rollout loss over all steps of the trajectory: per-step
// state cross-entropies, per-step scalar MSE on the scalar-update outputs,
// and the pointer cross-entropy over incident-edge tree logits at the final
// step (tree-output tasks only). Attention softmax and gate sigmoids are
// annealed by tau.
template <typename Real>
HintLossParts<Real> build_hint_loss(TapeT<Real>& tape, const ParamLeavesT<Real>& leaves,
                                    const ModelParams& mp, const GraphView& gv,
                                    const HintTrajectory& traj, Real tau, Real tau_attn);

// Free-running rollout for output-only supervision: state bottlenecks are
// Gumbel-Softmax samples at temperature tau, the loss is the pointer
// cross-entropy at the final step. k_nodes/k_edges come from the model's
// task blocks (latent vocabulary).
template <typename Real>
TensorRef<Real> build_no_hint_loss(TapeT<Real>& tape, const ParamLeavesT<Real>& leaves,
                                   const ModelParams& mp, const GraphView& gv, TaskId task,
                                   int steps, Real tau, Rng& rng);

// ---------------------------------------------------------------------------
// Hard (inference) path: the model's finite behavior tables

struct GateBits {
  std::array<int, 3> bits{};     // inc, keep, push in {0,1}
  std::array<double, 3> logit{};  // pre-threshold gate logits (reporting)
};

struct NetTables {
  TaskId task = TaskId::bfs;
  int k_nodes = 0, k_edges = 0;
  int model_heads = 1;
  std::vector<ScalarChannel> bindings;  // per model head
  std::vector<std::string> channels;    // scalar stores, per machine spec
  // scores[h][((q*k_n + s)*k_e + e)*2 + b]
  std::vector<std::vector<double>> scores;
  // node_next[((cur*k_n + w0)*k_n + w1)...] over model heads
  std::vector<int> node_next;
  // edge_next[(((e*k_n+su)*k_n+sv) << 2H) | fown bits | frev bits << H]
  std::vector<int> edge_next;
  std::vector<std::vector<GateBits>> node_gates;  // [channel][state]
  std::vector<std::vector<GateBits>> edge_gates;

  double score(int h, int q, int s, int e, int b) const {
    return scores[h][((q * k_nodes + s) * k_edges + e) * 2 + b];
  }
  int node_entry(int cur, const std::vector<int>& winners) const;
  int edge_entry(int e, int su, int sv, int fown_mask, int frev_mask) const;
};

// Enumerates the finite tables by probing the trained blocks directly
// (equivalent to evaluating the processor on synthetic one-hot graphs).
NetTables extract_tables(const ModelParams& mp, TaskId task);

// Per-edge attention logits computed from the raw parameters on a real
// graph (cross-checks the extracted score table).
std::vector<std::vector<double>> direct_edge_logits(const ModelParams& mp, TaskId task,
                                                    const GraphView& gv, const StepState& s);

// One hard processor step driven entirely by the tables.
StepState hard_step(const NetTables& nt, const GraphView& gv, const StepState& s);

// Free-running hard rollout for `steps` steps from encode_inputs.
std::vector<StepState> hard_rollout(const NetTables& nt, const Graph& g, int steps);

// Soft-aggregation inference (the no-hard-attention ablation): messages are
// softmax mixtures at temperature tau, states still discretize by argmax.
// Returns the rollout and, optionally per step, the attention weight each
// node put on a queried edge.
struct SoftInferResult {
  std::vector<StepState> steps;
  std::vector<std::vector<double>> probe_weight;  // [step][head] weight on probe_edge
};
SoftInferResult soft_infer_rollout(const ModelParams& mp, TaskId task, const Graph& g,
                                   int steps, double tau, int probe_edge = -1);

}  // namespace dgr
