#include "dgr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dgr/util.hpp"

namespace dgr {

using nlohmann::json;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

bool connected(int n, const std::set<std::pair<int, int>>& und_edges) {
  UnionFind uf(n);
  for (auto& [u, v] : und_edges) uf.unite(u, v);
  for (int i = 1; i < n; ++i)
    if (uf.find(i) != uf.find(0)) return false;
  return true;
}

Graph from_undirected(int n, const std::set<std::pair<int, int>>& und_edges) {
  Graph g;
  g.node_count = n;
  g.undirected_origin = true;
  for (int i = 0; i < n; ++i) g.edges.push_back({i, i});
  std::vector<Edge> cross;
  for (auto& [u, v] : und_edges) {
    cross.push_back({u, v});
    cross.push_back({v, u});
  }
  std::sort(cross.begin(), cross.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.sender, a.receiver) < std::tie(b.sender, b.receiver);
  });
  g.edges.insert(g.edges.end(), cross.begin(), cross.end());
  return g;
}

}  // namespace

std::vector<int> Graph::reverse_edge_index() const {
  std::map<std::pair<int, int>, int> pos;
  for (int e = 0; e < edge_count(); ++e) pos[{edges[e].sender, edges[e].receiver}] = e;
  std::vector<int> rev(edge_count(), -1);
  for (int e = 0; e < edge_count(); ++e) {
    auto it = pos.find({edges[e].receiver, edges[e].sender});
    if (it != pos.end()) rev[e] = it->second;
  }
  return rev;
}

std::vector<std::vector<int>> Graph::in_edges() const {
  std::vector<std::vector<int>> in(node_count);
  for (int e = 0; e < edge_count(); ++e) in[edges[e].receiver].push_back(e);
  return in;
}

std::vector<int> Graph::self_loop_index() const {
  std::vector<int> loop(node_count, -1);
  for (int e = 0; e < edge_count(); ++e)
    if (edges[e].sender == edges[e].receiver) loop[edges[e].sender] = e;
  return loop;
}

void Graph::validate() const {
  if (node_count < 1) throw std::invalid_argument("graph must have at least one node");
  std::vector<int> loops(node_count, 0);
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.sender < 0 || e.sender >= node_count || e.receiver < 0 || e.receiver >= node_count)
      throw std::invalid_argument("edge endpoint out of range");
    if (!seen.insert({e.sender, e.receiver}).second)
      throw std::invalid_argument("duplicate directed edge");
    if (e.sender == e.receiver) loops[e.sender]++;
  }
  for (int i = 0; i < node_count; ++i)
    if (loops[i] != 1) throw std::invalid_argument("node missing its self-loop");
  if (undirected_origin) {
    for (const auto& e : edges)
      if (e.sender != e.receiver && !seen.count({e.receiver, e.sender}))
        throw std::invalid_argument("undirected origin but reverse edge missing");
  }
  for (const auto& [name, vals] : node_scalars) {
    if (static_cast<int>(vals.size()) != node_count)
      throw std::invalid_argument("node channel size mismatch: " + name);
    for (double v : vals)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite node scalar in " + name);
  }
  for (const auto& [name, vals] : edge_scalars) {
    if (vals.size() != edges.size())
      throw std::invalid_argument("edge channel size mismatch: " + name);
    for (double v : vals)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite edge scalar in " + name);
  }
  if (start_node && (*start_node < 0 || *start_node >= node_count))
    throw std::invalid_argument("start node out of range");
}

double salsa_p(int n) {
  if (n < 2) throw std::invalid_argument("salsa_p requires n >= 2");
  return std::min(1.0, 2.0 * std::log(static_cast<double>(n)) / n);
}

Graph generate_er(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_er requires n >= 1");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("generate_er requires 0 < p <= 1");
  if (n == 1) {
    Graph g;
    g.node_count = 1;
    g.edges = {{0, 0}};
    g.undirected_origin = true;
    return g;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = make_rng(seed, attempt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::set<std::pair<int, int>> und;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (unit(rng) < p) und.insert({u, v});
    if (connected(n, und)) return from_undirected(n, und);
  }
  throw std::runtime_error("generate_er: 1000 resamples disconnected (p too low for n=" +
                           std::to_string(n) + ")");
}

Graph make_bipartite_k2(int n, std::uint64_t seed) {
  (void)seed;
  if (n < 4) throw std::invalid_argument("make_bipartite_k2 requires n >= 4");
  std::set<std::pair<int, int>> und;
  for (int u = 0; u < 2; ++u)
    for (int v = 2; v < n; ++v) und.insert({u, v});
  Graph g = from_undirected(n, und);
  g.start_node = 0;
  return g;
}

Graph attach_task_scalars(Graph g, TaskId task, std::uint64_t seed) {
  g.validate();
  const int n = g.node_count;
  const int m = g.edge_count();
  Rng rng = make_rng(seed, 17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto index_channel = [&] {
    std::vector<double> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = static_cast<double>(i);
    g.node_scalars["index"] = idx;
  };
  auto weight_channel = [&] {
    std::map<std::pair<int, int>, double> w;
    for (const auto& e : g.edges) {
      if (e.sender == e.receiver) continue;
      auto key = std::minmax(e.sender, e.receiver);
      if (!w.count({key.first, key.second})) w[{key.first, key.second}] = unit(rng);
    }
    std::vector<double> vals(m, 0.0);
    for (int e = 0; e < m; ++e) {
      const auto& ed = g.edges[e];
      if (ed.sender == ed.receiver) continue;
      auto key = std::minmax(ed.sender, ed.receiver);
      vals[e] = w[{key.first, key.second}];
    }
    g.edge_scalars["weight"] = vals;
  };

  switch (task) {
    case TaskId::bfs:
    case TaskId::dfs:
    case TaskId::ecc:
      index_channel();
      break;
    case TaskId::sp:
      index_channel();
      weight_channel();
      g.edge_scalars["dist"] = g.edge_scalars["weight"];
      break;
    case TaskId::prim:
      index_channel();
      weight_channel();
      break;
    case TaskId::mis: {
      std::vector<double> prio(n);
      for (int tries = 0; tries < 100; ++tries) {
        for (int i = 0; i < n; ++i) prio[i] = unit(rng);
        auto sorted = prio;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) break;
      }
      g.node_scalars["priority"] = prio;
      break;
    }
  }
  return g;
}

Graph add_virtual_node(Graph g) {
  if (g.virtual_node) throw std::invalid_argument("graph already has a virtual node");
  const int v = g.node_count;
  g.node_count += 1;
  for (int x = 0; x < v; ++x) {
    g.edges.push_back({x, v});
    g.edges.push_back({v, x});
  }
  g.edges.push_back({v, v});
  g.virtual_node = v;
  for (auto& [name, vals] : g.node_scalars) vals.push_back(0.0);
  for (auto& [name, vals] : g.edge_scalars) vals.resize(g.edges.size(), 0.0);
  return g;
}

Graph make_task_instance(TaskId task, int n, std::uint64_t seed) {
  double p = n >= 2 ? salsa_p(n) : 1.0;
  Graph g = generate_er(n, p, mix_seed(seed, 1));
  g = attach_task_scalars(std::move(g), task, mix_seed(seed, 2));
  if (task_is_rooted(task)) {
    Rng rng = make_rng(seed, 3);
    g.start_node = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  }
  if (task_uses_virtual_node(task)) g = add_virtual_node(std::move(g));
  return g;
}

namespace {

json graph_to_json(const Graph& g) {
  json j;
  j["n"] = g.node_count;
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.sender, e.receiver});
  j["edges"] = std::move(edges);
  j["undirected"] = g.undirected_origin;
  if (g.start_node) j["start"] = *g.start_node;
  if (g.virtual_node) j["virtual"] = *g.virtual_node;
  j["node_scalars"] = g.node_scalars;
  j["edge_scalars"] = g.edge_scalars;
  return j;
}

Graph graph_from_json(const json& j) {
  Graph g;
  g.node_count = j.at("n").get<int>();
  for (const auto& e : j.at("edges")) g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  g.undirected_origin = j.at("undirected").get<bool>();
  if (j.contains("start")) g.start_node = j.at("start").get<int>();
  if (j.contains("virtual")) g.virtual_node = j.at("virtual").get<int>();
  if (j.contains("node_scalars"))
    g.node_scalars = j.at("node_scalars").get<std::map<std::string, std::vector<double>>>();
  if (j.contains("edge_scalars"))
    g.edge_scalars = j.at("edge_scalars").get<std::map<std::string, std::vector<double>>>();
  g.validate();
  return g;
}

}  // namespace

void write_dataset(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  json header;
  header["format"] = "dgr-dataset";
  header["version"] = 1;
  header["task"] = task_name(split.task);
  header["seed"] = split.seed;
  header["size_label"] = split.size_label;
  header["count"] = split.graphs.size();
  out << header.dump() << "\n";
  for (const auto& g : split.graphs) out << graph_to_json(g).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

DatasetSplit read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  int line_no = 0;
  auto parse_line = [&](const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
      throw IoError("malformed dataset record at line " + std::to_string(line_no) + " in " + path);
    return j;
  };
  if (!std::getline(in, line)) throw IoError("empty dataset file: " + path);
  line_no = 1;
  json header = parse_line(line);
  DatasetSplit split;
  try {
    if (header.at("format") != "dgr-dataset") throw IoError("not a dgr dataset: " + path);
    split.task = parse_task_or_throw(header.at("task").get<std::string>());
    split.seed = header.at("seed").get<std::uint64_t>();
    split.size_label = header.at("size_label").get<int>();
  } catch (const json::exception&) {
    throw IoError("malformed dataset header at line 1 in " + path);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      split.graphs.push_back(graph_from_json(parse_line(line)));
    } catch (const json::exception&) {
      throw IoError("malformed dataset record at line " + std::to_string(line_no) + " in " + path);
    }
  }
  return split;
}

}  // namespace dgr
