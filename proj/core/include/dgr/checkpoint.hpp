#pragma once

#include <string>

#include "dgr/model.hpp"
#include "dgr/training.hpp"

namespace dgr {

// Versioned container: one JSON manifest line (format version, tasks,
// vocabulary sizes, hyperparameters, seed, annealing schedule) followed by
// named parameter blocks as row-major little-endian 32-bit floats, ending
// with a CRC32 of everything before it. Round trips are byte-exact.
void save_checkpoint(const ModelParams& mp, const TrainConfig& cfg, const std::string& path);

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
};
Checkpoint load_checkpoint(const std::string& path);

// Loads and verifies the checkpoint covers the requested task.
ModelParams load_checkpoint_for_task(const std::string& path, TaskId task);

}  // namespace dgr
