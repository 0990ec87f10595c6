// Shared helpers for test corpora.
#pragma once

#include <vector>

#include "dgr/graph.hpp"
#include "dgr/tasks.hpp"
#include "dgr/util.hpp"

namespace dgr::testing {

// Completes a bare graph skeleton into a task instance.
inline Graph finish_instance(Graph g, TaskId task, std::uint64_t seed, int start = 0) {
  g = attach_task_scalars(std::move(g), task, seed);
  if (task_is_rooted(task)) g.start_node = start;
  if (task_uses_virtual_node(task)) g = add_virtual_node(std::move(g));
  return g;
}

inline Graph path_graph(int n) {
  Graph g;
  g.node_count = n;
  for (int i = 0; i < n; ++i) g.edges.push_back({i, i});
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.push_back({i, i + 1});
    g.edges.push_back({i + 1, i});
  }
  return g;
}

inline Graph star_graph(int n) {  // node 0 in the center
  Graph g;
  g.node_count = n;
  for (int i = 0; i < n; ++i) g.edges.push_back({i, i});
  for (int i = 1; i < n; ++i) {
    g.edges.push_back({0, i});
    g.edges.push_back({i, 0});
  }
  return g;
}

// A deterministic mixed-size corpus of task instances.
inline std::vector<Graph> task_corpus(TaskId task, int per_size, std::uint64_t seed,
                                      int max_n = 16) {
  std::vector<Graph> out;
  for (int n = 1; n <= max_n; n = n < 8 ? n + 1 : n + 4)
    for (int k = 0; k < per_size; ++k)
      out.push_back(make_task_instance(task, n, mix_seed(seed, n * 1000 + k)));
  for (int n = 4; n <= 8; ++n) {
    Graph g = make_bipartite_k2(n, seed);
    out.push_back(finish_instance(std::move(g), task, mix_seed(seed, 77 + n)));
  }
  for (int n : {2, 3, 5, 9}) {
    out.push_back(finish_instance(path_graph(n), task, mix_seed(seed, 500 + n)));
    if (n >= 3)
      out.push_back(
          finish_instance(star_graph(n), task, mix_seed(seed, 600 + n), /*start=*/1));
  }
  return out;
}

}  // namespace dgr::testing
