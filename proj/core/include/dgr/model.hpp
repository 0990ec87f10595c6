#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgr/machine.hpp"
#include "dgr/tasks.hpp"

namespace dgr {

struct ParamBlock {
  std::string name;
  int rows = 0, cols = 1;
  std::vector<float> v;
};

// All learnable weights of one model: shared processor blocks plus one
// embedding/readout/gate family per task it was trained for.
struct ModelParams {
  int hidden = 64;
  int head_count = 1;
  std::vector<TaskId> tasks;
  std::vector<ParamBlock> blocks;
  std::map<std::string, int> index;
  bool hard_aggregation = true;    // false for the soft-attention ablation
  std::string variant = "standard";  // "ndsu" carries a learned scalar regressor

  int head_dim() const { return hidden / head_count; }
  bool has(const std::string& name) const { return index.count(name) != 0; }
  ParamBlock& at(const std::string& name);
  const ParamBlock& at(const std::string& name) const;
  ParamBlock& add(const std::string& name, int rows, int cols);
  bool covers(TaskId t) const;
};

inline std::string task_prefix(TaskId t) { return std::string("task/") + task_name(t) + "/"; }

// Attention-head channel bindings for a model with `model_heads` heads
// running `task`: the task's own heads, repeated when the model is wider
// (multitask models share one head count across tasks).
std::vector<ScalarChannel> head_bindings(const MachineSpec& spec, int model_heads);

// Fresh randomly initialized model. head_count 0 derives the width from the
// tasks (max over task head counts). nohint_k > 0 replaces the single task's
// state vocabulary with k latent node states and two latent edge states.
ModelParams init_model(const std::vector<TaskId>& tasks, int hidden, int head_count,
                       std::uint64_t seed, int nohint_k = 0);

// Vocabulary sizes a model uses for a task (latent for no-hint models).
std::pair<int, int> model_vocab_sizes(const ModelParams& mp, TaskId task);

// Deterministic parameters that realize the task's reference machine
// exactly: attention scores implementing the ranked preferences, transition
// tables compiled into the FFNs, gates at their forced bits. Used as a
// training-free full-pipeline fixture. Throws if the reachable table does
// not fit the hidden width.
ModelParams golden_model(TaskId task, int hidden = 64);

}  // namespace dgr
