#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgr/tasks.hpp"

namespace dgr {

struct Edge {
  int sender = 0;
  int receiver = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Directed graph with one self-loop per node. Undirected inputs are expanded
// to two directed edges. Scalar channels attach real values to nodes or edges.
struct Graph {
  int node_count = 0;
  std::vector<Edge> edges;
  bool undirected_origin = true;
  std::optional<int> start_node;
  std::optional<int> virtual_node;
  std::map<std::string, std::vector<double>> node_scalars;
  std::map<std::string, std::vector<double>> edge_scalars;

  int edge_count() const { return static_cast<int>(edges.size()); }
  // Index of the reverse edge of e, or -1 when absent. Self-loops map to
  // themselves.
  std::vector<int> reverse_edge_index() const;
  // Edge indices grouped by receiver, ascending edge index within a group.
  std::vector<std::vector<int>> in_edges() const;
  std::vector<int> self_loop_index() const;
  void validate() const;  // throws std::invalid_argument on broken invariants
};

// Priority sense for select-best comparisons.
enum class Direction { min, max };

// One attention head reads one scalar channel, either through the sender
// node's value or through the edge's own value.
enum class ChannelSide { node, edge };

struct ScalarChannel {
  std::string name;
  ChannelSide attachment = ChannelSide::node;
  Direction direction = Direction::min;
};

struct DatasetSplit {
  TaskId task = TaskId::bfs;
  std::vector<Graph> graphs;
  std::uint64_t seed = 0;
  int size_label = 0;
};

// p(n) used for ER sampling: min(1, 2 ln(n) / n).
double salsa_p(int n);

// Connected undirected ER graph expanded to directed form with self-loops.
// Resamples until connected; throws after 1000 failures.
Graph generate_er(int n, double p, std::uint64_t seed);

// Complete bipartite K_{2,n-2}; start node on the 2-side.
Graph make_bipartite_k2(int n, std::uint64_t seed);

// Attaches the task's input scalar channels (seeded where random).
Graph attach_task_scalars(Graph g, TaskId task, std::uint64_t seed);

// Adds one node connected bidirectionally to every original node, with its
// own self-loop and zero-valued scalar entries.
Graph add_virtual_node(Graph g);

// Full instance builder used by dataset generation: ER graph + scalars +
// start node + virtual node when the task's machine needs one.
Graph make_task_instance(TaskId task, int n, std::uint64_t seed);

void write_dataset(const DatasetSplit& split, const std::string& path);
DatasetSplit read_dataset(const std::string& path);

}  // namespace dgr
