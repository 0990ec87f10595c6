#include <doctest.h>

#include <cmath>
#include <map>

#include "common.hpp"
#include "dgr/reference.hpp"
#include "oracles.hpp"

using namespace dgr;

namespace {

void check_no_stall(const HintTrajectory& traj) {
  for (int t = 1; t < traj.step_count(); ++t) CHECK(traj.steps[t] != traj.steps[t - 1]);
}

int depth_via_parents(const std::vector<int>& parents, int v) {
  int d = 0;
  while (parents[v] != v) {
    v = parents[v];
    ++d;
    REQUIRE(d <= static_cast<int>(parents.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("bfs reference matches brute-force flood") {
  for (const Graph& g : testing::task_corpus(TaskId::bfs, 4, 11)) {
    auto traj = run_reference(TaskId::bfs, g);
    check_no_stall(traj);
    CHECK(traj.steps.front() == encode_inputs(g, TaskId::bfs));
    CHECK(traj.outputs.malformed_nodes.empty());
    auto want = oracle::bfs_parents(g, *g.start_node);
    REQUIRE(traj.outputs.parents == want);
    auto depth = oracle::bfs_depths(g, *g.start_node);
    for (int v = 0; v < real_node_count(g); ++v)
      CHECK(depth_via_parents(traj.outputs.parents, v) == depth[v]);
    CHECK(traj.step_count() == std::max(1, oracle::eccentricity_of(g, *g.start_node)));
  }
}

TEST_CASE("bfs single node points to itself") {
  Graph g = make_task_instance(TaskId::bfs, 1, 3);
  auto traj = run_reference(TaskId::bfs, g);
  CHECK(traj.step_count() == 1);
  CHECK(traj.outputs.parents == std::vector<int>{0});
}

TEST_CASE("dfs reference matches recursive oracle") {
  for (const Graph& g : testing::task_corpus(TaskId::dfs, 4, 13)) {
    auto traj = run_reference(TaskId::dfs, g);
    check_no_stall(traj);
    CHECK(traj.outputs.malformed_nodes.empty());
    auto want = oracle::dfs_recursive(g, *g.start_node);
    REQUIRE(traj.outputs.parents == want.parent);
    // discovery order: first step each node turns active
    const MachineSpec& m = machine_spec(TaskId::dfs);
    const int active = m.node_state_id("active");
    std::map<int, int> first_active;  // node -> step
    for (int t = 0; t <= traj.step_count(); ++t)
      for (int v = 0; v < g.node_count; ++v)
        if (traj.steps[t].node_state[v] == active && !first_active.count(v))
          first_active[v] = t;
    REQUIRE(first_active.size() == static_cast<std::size_t>(g.node_count));
    for (int a = 0; a < g.node_count; ++a)
      for (int b = 0; b < g.node_count; ++b)
        if (want.discovery[a] < want.discovery[b])
          CHECK(first_active[a] < first_active[b]);
    CHECK(traj.step_count() <= 4 * g.node_count);
  }
}

TEST_CASE("dijkstra reference matches bellman-ford") {
  for (const Graph& g : testing::task_corpus(TaskId::sp, 4, 17)) {
    auto traj = run_reference(TaskId::sp, g);
    check_no_stall(traj);
    CHECK(traj.outputs.malformed_nodes.empty());
    auto want = oracle::dijkstra_parents(g, *g.start_node);
    REQUIRE(traj.outputs.parents == want);
    // tree-edge dist values carry the exact path sums
    auto dist = oracle::bellman_ford(g, *g.start_node);
    const MachineSpec& m = machine_spec(TaskId::sp);
    const int tree = m.edge_state_id("tree");
    const int dist_c = m.channel_id("dist");
    const StepState& last = traj.steps.back();
    for (int e = 0; e < g.edge_count(); ++e) {
      if (last.edge_state[e] != tree) continue;
      int child = g.edges[e].receiver;
      if (child >= real_node_count(g)) continue;
      CHECK(std::abs(last.edge_values[dist_c][e] - dist[child]) <= 1e-9);
    }
  }
}

TEST_CASE("dijkstra three-node path example") {
  // path a-b-c, weights 0.3 and 0.2, start a
  Graph g = testing::path_graph(3);
  g = attach_task_scalars(std::move(g), TaskId::sp, 5);
  auto& w = g.edge_scalars["weight"];
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edges[e];
    if (ed.sender != ed.receiver)
      w[e] = (std::min(ed.sender, ed.receiver) == 0) ? 0.3 : 0.2;
  }
  g.edge_scalars["dist"] = w;
  g.start_node = 0;
  g = add_virtual_node(std::move(g));
  auto traj = run_reference(TaskId::sp, g);
  CHECK(traj.outputs.parents == std::vector<int>{0, 0, 1});
  auto dist = oracle::bellman_ford(g, 0);
  CHECK(dist[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(dist[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("prim reference matches kruskal weight") {
  for (const Graph& g : testing::task_corpus(TaskId::prim, 4, 19)) {
    auto traj = run_reference(TaskId::prim, g);
    check_no_stall(traj);
    CHECK(traj.outputs.malformed_nodes.empty());
    const auto& w = g.edge_scalars.at("weight");
    double total = 0.0;
    for (int v = 0; v < real_node_count(g); ++v) {
      int p = traj.outputs.parents[v];
      REQUIRE(p >= 0);
      if (p == v) continue;
      for (int e = 0; e < g.edge_count(); ++e)
        if (g.edges[e].sender == p && g.edges[e].receiver == v) total += w[e];
    }
    CHECK(std::abs(total - oracle::kruskal_weight(g)) <= 1e-9);
    // parents reach the root
    for (int v = 0; v < real_node_count(g); ++v) depth_via_parents(traj.outputs.parents, v);
  }
}

TEST_CASE("mis reference equals parallel min-priority rounds") {
  for (const Graph& g : testing::task_corpus(TaskId::mis, 4, 23)) {
    auto traj = run_reference(TaskId::mis, g);
    check_no_stall(traj);
    auto want = oracle::luby_min_rounds(g);
    REQUIRE(traj.outputs.in_set == want);
    CHECK(oracle::independent_and_maximal(g, traj.outputs.in_set));
  }
}

TEST_CASE("mis K22 example") {
  Graph g;
  g.node_count = 4;
  for (int i = 0; i < 4; ++i) g.edges.push_back({i, i});
  for (int u : {0, 1})
    for (int v : {2, 3}) {
      g.edges.push_back({u, v});
      g.edges.push_back({v, u});
    }
  g.node_scalars["priority"] = {0.1, 0.4, 0.2, 0.9};
  g = add_virtual_node(std::move(g));
  auto traj = run_reference(TaskId::mis, g);
  CHECK(traj.outputs.in_set == oracle::luby_min_rounds(g));
  CHECK(traj.outputs.in_set == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("eccentricity reference equals max bfs depth") {
  for (const Graph& g : testing::task_corpus(TaskId::ecc, 4, 29)) {
    auto traj = run_reference(TaskId::ecc, g);
    check_no_stall(traj);
    CHECK(traj.outputs.eccentricity == oracle::eccentricity_of(g, *g.start_node));
  }
}

TEST_CASE("eccentricity star center is one") {
  Graph g = testing::finish_instance(testing::star_graph(6), TaskId::ecc, 3, /*start=*/0);
  auto traj = run_reference(TaskId::ecc, g);
  CHECK(traj.outputs.eccentricity == 1);
  Graph p = testing::finish_instance(testing::path_graph(4), TaskId::ecc, 3, /*start=*/0);
  CHECK(run_reference(TaskId::ecc, p).outputs.eccentricity == 3);
}

TEST_CASE("decode of reference final state equals reference outputs") {
  for (TaskId task : kAllTasks) {
    for (int k = 0; k < 50; ++k) {
      Graph g = make_task_instance(task, 16, mix_seed(31, k));
      auto traj = run_reference(task, g);
      auto again = decode_outputs(traj.steps.back(), g, task);
      CHECK(again.parents == traj.outputs.parents);
      CHECK(again.in_set == traj.outputs.in_set);
      CHECK(again.eccentricity == traj.outputs.eccentricity);
    }
  }
}
