#pragma once

#include <vector>

#include "dgr/graph.hpp"
#include "dgr/machine.hpp"
#include "dgr/tasks.hpp"

namespace dgr {

// Final task outputs. Parent pointers for the tree-building tasks (a node
// with zero or multiple tree pointers is recorded as malformed), membership
// flags for MIS, the round count for eccentricity.
struct TaskOutput {
  std::vector<int> parents;          // real nodes; -1 when malformed/absent
  std::vector<std::uint8_t> in_set;  // real nodes (MIS)
  int eccentricity = -1;
  std::vector<int> malformed_nodes;
};

struct HintTrajectory {
  TaskId task = TaskId::bfs;
  std::vector<StepState> steps;  // length T+1, step 0 = encode_inputs
  TaskOutput outputs;
  int step_count() const { return static_cast<int>(steps.size()) - 1; }
};

// Number of real (non-virtual) nodes a graph has.
int real_node_count(const Graph& g);

// Reads task outputs off a final machine state.
TaskOutput decode_outputs(const StepState& final, const Graph& g, TaskId task);

// Ground-truth executor: runs the task's machine to its fixed point and
// returns every intermediate state plus the decoded outputs.
HintTrajectory run_reference(TaskId task, const Graph& g);

// Step count of the ground-truth trajectory (the processor's rollout length).
int reference_step_count(TaskId task, const Graph& g);

// Node-level correctness of predicted outputs against reference outputs:
// {#correct, #total} over real nodes (eccentricity: 1/1 or 0/1).
std::pair<int, int> score_outputs(const TaskOutput& pred, const TaskOutput& ref, TaskId task);

// Line-delimited trajectory dump (state names + scalar values per step).
std::string format_trajectory(const HintTrajectory& traj, const Graph& g);

}  // namespace dgr
