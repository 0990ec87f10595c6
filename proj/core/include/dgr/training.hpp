#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/model.hpp"
#include "dgr/processor.hpp"
#include "dgr/reference.hpp"

namespace dgr {

struct TrainConfig {
  std::vector<TaskId> tasks;
  int steps = 1000;  // 10000 for multitask
  double lr = 0.001;
  int batch = 32;
  double tau_start = 3.0, tau_end = 0.01;
  std::uint64_t seed = 0;
  bool hints = true;
  int nohint_k = 0;  // latent node-state count for no-hint training
  int train_n_min = 4, train_n_max = 16;
  int fixed_n = 0;    // >0 pins every training graph to this size
  double er_p = 0.0;  // >0 pins the ER edge probability
  int pool_size = 512;
  int hidden = 64;
  int head_count = 0;  // 0 = derive from tasks
  std::string variant = "standard";  // "soft_attention" | "ndsu"
};

struct LossReport {
  double node_ce = 0, edge_ce = 0, parent_ce = 0, scalar_mse = 0, total = 0;
  std::map<std::string, double> per_task_total;
};

struct MetricsRecord {
  int step = 0;
  double tau = 0;
  LossReport loss;
};

struct TrainResult {
  ModelParams params;
  TrainConfig config;
  std::vector<MetricsRecord> history;
  bool diverged = false;
};

// Geometric annealing from tau_start to tau_end across the run.
double temperature_at(int step, const TrainConfig& cfg);

// Forward-only loss evaluation of a model on one trajectory.
LossReport hint_losses(const ModelParams& mp, const Graph& g, const HintTrajectory& traj,
                       double tau);

// Pre-generated training pool (graphs plus their ground-truth trajectories).
struct TrainPool {
  std::vector<Graph> graphs;
  std::vector<HintTrajectory> trajs;
};
TrainPool make_train_pool(TaskId task, const TrainConfig& cfg, std::uint64_t seed);

TrainResult train_single_task(const TrainConfig& cfg);
TrainResult train_multitask(const TrainConfig& cfg);
TrainResult train_no_hint(const TrainConfig& cfg);

// Line-delimited metrics dump (step, losses, tau).
std::string format_metrics(const std::vector<MetricsRecord>& history);

}  // namespace dgr
