#pragma once

#include <string>
#include <vector>

#include "dgr/model.hpp"
#include "dgr/reference.hpp"

namespace dgr {

struct EvalReport {
  TaskId task = TaskId::bfs;
  struct PerSize {
    int size = 0;
    int n_graphs = 0;
    double node_level = -1;   // mean fraction of correct node outputs; <0 = not applicable
    double graph_level = 0;   // fraction of graphs with every output correct
  };
  std::vector<PerSize> sizes;
  std::uint64_t seed = 0;
  std::string summary() const;    // plain-text table
  std::string records() const;    // line-delimited structured records
};

// Free rollouts against run_reference outputs on fresh instances. Rollout
// length is the per-graph ground-truth trajectory length. Malformed pointer
// decodes count as incorrect nodes.
EvalReport evaluate(const ModelParams& mp, TaskId task, const std::vector<int>& sizes,
                    int n_graphs, std::uint64_t seed);

// Model outputs for one graph (dispatches on the model variant).
TaskOutput predict_outputs(const ModelParams& mp, TaskId task, const Graph& g);

// Latent-vocabulary (no-hint) decode: pointer = incoming edge in latent
// state 1.
TaskOutput nohint_decode(const StepState& final, const Graph& g);

// Initial latent states for a no-hint model.
StepState nohint_encode(const Graph& g, TaskId task, int k_nodes, int k_edges);

// Writes the predicted per-step trajectory in the reference dump format
// plus a plain graph description.
void dump_trace(const ModelParams& mp, TaskId task, const Graph& g, const std::string& path);

}  // namespace dgr
