#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgr/eval.hpp"
#include "dgr/model.hpp"
#include "dgr/training.hpp"

namespace dgr {

// --- soft-attention study ---------------------------------------------------

struct SoftAttentionReport {
  EvalReport in_distribution;                 // ER test at n=16
  struct Probe {
    int n = 0;
    double parent_weight = 0;  // attention weight on the true parent edge
    bool correct = false;      // decoded pointer matched
  };
  std::vector<Probe> probes;  // complete bipartite instances, increasing n
  std::string summary() const;
};

// Trains the model with plain softmax aggregation (temperature 1, never
// annealed to hard) and measures how the true-parent attention weight decays
// on complete bipartite graphs as the neighborhood grows.
SoftAttentionReport ablate_soft_attention(std::uint64_t seed,
                                          const std::vector<int>& probe_sizes = {16, 80, 160,
                                                                                 800});

// --- non-discrete scalar updater ---------------------------------------------

struct NdsuReport {
  EvalReport free_running;      // regressor-predicted scalars feed forward
  EvalReport teacher_scalars;   // control: ground-truth scalars injected
  std::string summary() const;
};

void add_ndsu_blocks(ModelParams& mp, TaskId task, std::uint64_t seed);

// Scalar-regressor replacement for the gated update (used when
// mp.variant == "ndsu"): hint losses keep the state cross-entropies but the
// scalar MSE supervises a single-layer attention regressor.
template <typename Real>
HintLossParts<Real> build_hint_loss_ndsu(TapeT<Real>& tape, const ParamLeavesT<Real>& leaves,
                                         const ModelParams& mp, const GraphView& gv,
                                         const HintTrajectory& traj, Real tau, Real tau_attn);

TaskOutput ndsu_predict_outputs(const ModelParams& mp, TaskId task, const Graph& g, int steps,
                                const HintTrajectory* teacher_scalars = nullptr);

NdsuReport ablate_nondiscrete_scalar(TaskId task, std::uint64_t seed,
                                     const std::vector<int>& sizes = {16, 80, 160});

// --- minimal training sizes ---------------------------------------------------

struct MinSizeReport {
  TaskId task = TaskId::bfs;
  std::map<int, double> node_level_at_160;  // train size -> node-level score
  std::string summary() const;
};
MinSizeReport ablate_min_train_size(TaskId task, const std::vector<int>& train_sizes,
                                    std::uint64_t seed, int eval_graphs = 50);

// --- extended scalar-update operation set -------------------------------------

struct ExtendedOpsReport {
  // per target f0..f4: {train MSE, test MSE}
  std::vector<std::pair<double, double>> discrete;
  std::vector<std::pair<double, double>> continuous;
  std::string summary() const;
};
ExtendedOpsReport run_extended_scalar_ops(std::uint64_t seed);

// --- no-hint search ------------------------------------------------------------

struct NoHintResult {
  int train_n = 0, k = 0;
  double tau_end = 0;
  std::uint64_t seed = 0;
  double val_node = 0, val_graph = 0;  // validation at n=16
  TrainResult trained;
};
// Best-first summary of a (sizes x state-counts x schedules x seeds) grid.
std::vector<NoHintResult> no_hint_search(const std::vector<int>& train_sizes,
                                         const std::vector<int>& ks,
                                         const std::vector<double>& tau_ends, int seeds,
                                         std::uint64_t base_seed, int val_graphs = 100);

}  // namespace dgr
