// Test-only brute-force oracles, independent of the machine executors.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include "dgr/graph.hpp"
#include "dgr/reference.hpp"

namespace dgr::oracle {

// Undirected adjacency over real nodes only, self-loops dropped.
inline std::vector<std::vector<int>> adjacency(const Graph& g) {
  int n = real_node_count(g);
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    if (e.sender == e.receiver) continue;
    if (e.sender >= n || e.receiver >= n) continue;  // skip virtual-node edges
    adj[e.sender].push_back(e.receiver);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

inline std::vector<int> bfs_depths(const Graph& g, int start) {
  auto adj = adjacency(g);
  std::vector<int> depth(adj.size(), -1);
  std::deque<int> q{start};
  depth[start] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : adj[u])
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        q.push_back(v);
      }
  }
  return depth;
}

// BFS parents: smallest-index neighbor in the previous layer; start points
// to itself.
inline std::vector<int> bfs_parents(const Graph& g, int start) {
  auto adj = adjacency(g);
  auto depth = bfs_depths(g, start);
  std::vector<int> parent(adj.size(), -1);
  parent[start] = start;
  for (std::size_t v = 0; v < adj.size(); ++v) {
    if (static_cast<int>(v) == start || depth[v] < 0) continue;
    for (int u : adj[v])
      if (depth[u] == depth[v] - 1) {
        parent[v] = u;
        break;
      }
  }
  return parent;
}

// Recursive DFS from start, children in ascending index order.
struct DfsOracle {
  std::vector<int> parent, discovery, finish;
};
inline DfsOracle dfs_recursive(const Graph& g, int start) {
  auto adj = adjacency(g);
  DfsOracle r;
  int n = static_cast<int>(adj.size());
  r.parent.assign(n, -1);
  r.discovery.assign(n, -1);
  r.finish.assign(n, -1);
  int clock = 0;
  std::vector<int> stack;
  r.parent[start] = start;
  // iterative to dodge deep recursion on large paths
  struct Frame {
    int node;
    std::size_t next_child = 0;
  };
  std::vector<Frame> frames{{start}};
  r.discovery[start] = clock++;
  while (!frames.empty()) {
    Frame& f = frames.back();
    bool descended = false;
    while (f.next_child < adj[f.node].size()) {
      int c = adj[f.node][f.next_child++];
      if (r.discovery[c] < 0) {
        r.discovery[c] = clock++;
        r.parent[c] = f.node;
        frames.push_back({c});
        descended = true;
        break;
      }
    }
    if (!descended && !frames.empty() && &f == &frames.back()) {
      r.finish[f.node] = clock++;
      frames.pop_back();
    }
  }
  return r;
}

inline std::vector<double> bellman_ford(const Graph& g, int start) {
  int n = real_node_count(g);
  const auto& w = g.edge_scalars.at("weight");
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  dist[start] = 0.0;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int e = 0; e < g.edge_count(); ++e) {
      const auto& ed = g.edges[e];
      if (ed.sender == ed.receiver || ed.sender >= n || ed.receiver >= n) continue;
      if (dist[ed.sender] + w[e] < dist[ed.receiver]) {
        dist[ed.receiver] = dist[ed.sender] + w[e];
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist;
}

inline std::vector<int> dijkstra_parents(const Graph& g, int start) {
  int n = real_node_count(g);
  auto dist = bellman_ford(g, start);
  const auto& w = g.edge_scalars.at("weight");
  std::vector<int> parent(n, -1);
  parent[start] = start;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edges[e];
    if (ed.sender == ed.receiver || ed.sender >= n || ed.receiver >= n) continue;
    if (ed.receiver == start) continue;
    double through = dist[ed.sender] + w[e];
    if (through < best[ed.receiver]) {
      best[ed.receiver] = through;
      parent[ed.receiver] = ed.sender;
    }
  }
  return parent;
}

inline double kruskal_weight(const Graph& g) {
  int n = real_node_count(g);
  const auto& w = g.edge_scalars.at("weight");
  std::vector<std::tuple<double, int, int>> und;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edges[e];
    if (ed.sender >= ed.receiver || ed.receiver >= n) continue;
    und.push_back({w[e], ed.sender, ed.receiver});
  }
  std::sort(und.begin(), und.end());
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  double total = 0.0;
  for (auto& [wt, a, b] : und)
    if (find(a) != find(b)) {
      uf[find(a)] = find(b);
      total += wt;
    }
  return total;
}

// Parallel rounds: every undecided node whose priority is minimal in its
// undecided closed neighborhood joins; neighbors of joiners drop out.
inline std::vector<std::uint8_t> luby_min_rounds(const Graph& g) {
  auto adj = adjacency(g);
  const auto& prio = g.node_scalars.at("priority");
  int n = static_cast<int>(adj.size());
  std::vector<int> status(n, 0);  // 0 undecided, 1 in, 2 out
  for (int round = 0; round < n + 1; ++round) {
    std::vector<int> joiners;
    for (int v = 0; v < n; ++v) {
      if (status[v] != 0) continue;
      bool is_min = true;
      for (int u : adj[v])
        if (status[u] == 0 && prio[u] < prio[v]) {
          is_min = false;
          break;
        }
      if (is_min) joiners.push_back(v);
    }
    if (joiners.empty()) break;
    for (int v : joiners) status[v] = 1;
    for (int v : joiners)
      for (int u : adj[v])
        if (status[u] == 0) status[u] = 2;
  }
  std::vector<std::uint8_t> in(n, 0);
  for (int v = 0; v < n; ++v) in[v] = status[v] == 1 ? 1 : 0;
  return in;
}

inline bool independent_and_maximal(const Graph& g, const std::vector<std::uint8_t>& in) {
  auto adj = adjacency(g);
  int n = static_cast<int>(adj.size());
  for (int v = 0; v < n; ++v)
    if (in[v])
      for (int u : adj[v])
        if (in[u]) return false;
  for (int v = 0; v < n; ++v) {
    if (in[v]) continue;
    bool blocked = false;
    for (int u : adj[v])
      if (in[u]) blocked = true;
    if (!blocked) return false;
  }
  return true;
}

inline int eccentricity_of(const Graph& g, int start) {
  auto depth = bfs_depths(g, start);
  return *std::max_element(depth.begin(), depth.end());
}

}  // namespace dgr::oracle
