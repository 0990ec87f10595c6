#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "dgr/certifier.hpp"
#include "dgr/eval.hpp"
#include "dgr/processor.hpp"
#include "dgr/training.hpp"
#include "dgr/util.hpp"

using namespace dgr;

TEST_CASE("encode_inputs equals reference step zero") {
  for (TaskId task : kAllTasks)
    for (int k = 0; k < 10; ++k) {
      Graph g = make_task_instance(task, 4 + k, mix_seed(3, k));
      auto traj = run_reference(task, g);
      CHECK(encode_inputs(g, task) == traj.steps.front());
    }
  Graph one = make_task_instance(TaskId::bfs, 1, 0);
  auto s = encode_inputs(one, TaskId::bfs);
  CHECK(s.node_state == std::vector<int>{1});  // single visited node
}

TEST_CASE("select-best indicator bits") {
  const MachineSpec& m = machine_spec(TaskId::bfs);
  SUBCASE("single edge in its group") {
    Graph g = testing::finish_instance(testing::path_graph(2), TaskId::bfs, 0, 0);
    GraphView gv(g);
    auto s = encode_inputs(g, TaskId::bfs);
    auto bits = select_best_bits(m, gv, s, 0);
    // every group here is a singleton
    for (auto b : bits) CHECK(b == 1);
  }
  SUBCASE("visited neighbors at indices 3 and 7: only the edge from 3 wins") {
    Graph g = testing::star_graph(8);  // center 0
    g = testing::finish_instance(std::move(g), TaskId::bfs, 1, 0);
    GraphView gv(g);
    auto s = encode_inputs(g, TaskId::bfs);
    const int visited = m.node_state_id("visited");
    s.node_state[3] = visited;
    s.node_state[7] = visited;
    auto bits = select_best_bits(m, gv, s, 0);
    for (int e = 0; e < g.edge_count(); ++e) {
      if (g.edges[e].receiver != 0 || g.edges[e].sender == 0) continue;
      if (s.node_state[g.edges[e].sender] == visited)
        CHECK(int(bits[e]) == (g.edges[e].sender == 3 ? 1 : 0));
    }
  }
  SUBCASE("exact ties set both bits") {
    Graph g = testing::finish_instance(testing::star_graph(3), TaskId::mis, 2, 0);
    GraphView gv(g);
    auto s = encode_inputs(g, TaskId::mis);
    const MachineSpec& mm = machine_spec(TaskId::mis);
    int c = mm.channel_id("priority");
    s.node_values[c][1] = 0.25;
    s.node_values[c][2] = 0.25;
    auto bits = select_best_bits(mm, gv, s, 0);
    int both = 0;
    for (int e = 0; e < g.edge_count(); ++e)
      if (g.edges[e].receiver == 0 && g.edges[e].sender != 0 &&
          g.edges[e].sender != *g.virtual_node && bits[e])
        ++both;
    CHECK(both == 2);
  }
}

TEST_CASE("attention logits are a function of the state tuple only") {
  ModelParams mp = init_model({TaskId::bfs}, 32, 0, 9);
  Graph g = make_task_instance(TaskId::bfs, 12, 4);
  GraphView gv(g);
  auto traj = run_reference(TaskId::bfs, g);
  const StepState& s = traj.steps[1];
  auto logits = direct_edge_logits(mp, TaskId::bfs, gv, s);
  const MachineSpec& m = machine_spec(TaskId::bfs);
  auto bits = select_best_bits(m, gv, s, 0);
  for (int a = 0; a < g.edge_count(); ++a)
    for (int b = a + 1; b < g.edge_count(); ++b) {
      bool same_tuple = s.node_state[g.edges[a].receiver] == s.node_state[g.edges[b].receiver] &&
                        s.node_state[g.edges[a].sender] == s.node_state[g.edges[b].sender] &&
                        s.edge_state[a] == s.edge_state[b] && bits[a] == bits[b];
      if (same_tuple) CHECK(logits[0][a] == doctest::Approx(logits[0][b]).epsilon(1e-12));
    }
}

TEST_CASE("all-zero parameters give all-zero logits") {
  ModelParams mp = init_model({TaskId::bfs}, 32, 0, 1);
  for (auto& b : mp.blocks) std::fill(b.v.begin(), b.v.end(), 0.0f);
  Graph g = make_task_instance(TaskId::bfs, 6, 2);
  GraphView gv(g);
  auto logits = direct_edge_logits(mp, TaskId::bfs, gv, encode_inputs(g, TaskId::bfs));
  for (double l : logits[0]) CHECK(l == 0.0);
}

TEST_CASE("node relabeling permutes logits identically") {
  ModelParams mp = init_model({TaskId::bfs}, 32, 0, 15);
  Graph g = make_task_instance(TaskId::bfs, 9, 8);
  // relabel v -> (v+3) mod 9, then restore canonical edge order
  const int n = g.node_count;
  auto perm = [&](int v) { return (v + 3) % n; };
  Graph h = g;
  for (auto& e : h.edges) e = {perm(e.sender), perm(e.receiver)};
  h.start_node = perm(*g.start_node);
  std::vector<int> order(h.edge_count());
  for (int i = 0; i < h.edge_count(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    bool la = h.edges[a].sender == h.edges[a].receiver;
    bool lb = h.edges[b].sender == h.edges[b].receiver;
    if (la != lb) return la;
    if (la) return h.edges[a].sender < h.edges[b].sender;
    return std::tie(h.edges[a].sender, h.edges[a].receiver) <
           std::tie(h.edges[b].sender, h.edges[b].receiver);
  });
  Graph h2;
  h2.node_count = n;
  h2.undirected_origin = true;
  h2.start_node = h.start_node;
  std::vector<double> widx(n);
  for (int v = 0; v < n; ++v) widx[perm(v)] = g.node_scalars.at("index")[v];
  h2.node_scalars["index"] = widx;
  for (int i : order) h2.edges.push_back(h.edges[i]);

  GraphView gv_g(g), gv_h(h2);
  // run both to the same logical step and compare logits edge-by-edge
  auto tg = run_reference(TaskId::bfs, g);
  auto th = run_reference(TaskId::bfs, h2);
  REQUIRE(tg.step_count() == th.step_count());
  for (int t = 0; t <= 1; ++t) {
    auto lg = direct_edge_logits(mp, TaskId::bfs, gv_g, tg.steps[t]);
    auto lh = direct_edge_logits(mp, TaskId::bfs, gv_h, th.steps[t]);
    for (int e = 0; e < g.edge_count(); ++e) {
      // find the corresponding edge in h2
      Edge want{perm(g.edges[e].sender), perm(g.edges[e].receiver)};
      for (int f = 0; f < h2.edge_count(); ++f)
        if (h2.edges[f] == want) CHECK(lg[0][e] == doctest::Approx(lh[0][f]).epsilon(1e-9));
    }
  }
}

TEST_CASE("table-realizing model reproduces the reference executor exactly") {
  for (TaskId task : kAllTasks) {
    CAPTURE(task_name(task));
    ModelParams golden = golden_model(task);
    NetTables nt = extract_tables(golden, task);
    for (const Graph& g : testing::task_corpus(task, 2, 101, 16)) {
      auto ref = run_reference(task, g);
      auto steps = hard_rollout(nt, g, ref.step_count());
      REQUIRE(steps.size() == ref.steps.size());
      for (std::size_t t = 0; t < steps.size(); ++t) {
        REQUIRE(steps[t].node_state == ref.steps[t].node_state);
        REQUIRE(steps[t].edge_state == ref.steps[t].edge_state);
        for (std::size_t c = 0; c < steps[t].node_values.size(); ++c) {
          for (int v = 0; v < g.node_count; ++v)
            REQUIRE(steps[t].node_values[c][v] ==
                    doctest::Approx(ref.steps[t].node_values[c][v]).epsilon(1e-12));
          for (int e = 0; e < g.edge_count(); ++e)
            REQUIRE(steps[t].edge_values[c][e] ==
                    doctest::Approx(ref.steps[t].edge_values[c][e]).epsilon(1e-12));
        }
      }
      auto out = decode_outputs(steps.back(), g, task);
      CHECK(score_outputs(out, ref.outputs, task) ==
            score_outputs(ref.outputs, ref.outputs, task));
    }
  }
}

TEST_CASE("fixed point: a finished rollout maps to itself") {
  ModelParams golden = golden_model(TaskId::bfs);
  NetTables nt = extract_tables(golden, TaskId::bfs);
  Graph g = make_task_instance(TaskId::bfs, 10, 5);
  int T = reference_step_count(TaskId::bfs, g);
  auto steps = hard_rollout(nt, g, T + 3);
  CHECK(steps[T] == steps[T + 1]);
  CHECK(steps[T] == steps[T + 3]);
}

TEST_CASE("soft aggregation at tiny temperature matches hard aggregation") {
  ModelParams golden = golden_model(TaskId::bfs);
  NetTables nt = extract_tables(golden, TaskId::bfs);
  Graph g = make_task_instance(TaskId::bfs, 12, 6);
  int T = reference_step_count(TaskId::bfs, g);
  auto hard = hard_rollout(nt, g, T);
  auto soft = soft_infer_rollout(golden, TaskId::bfs, g, T, 0.01);
  for (int t = 0; t <= T; ++t) {
    CHECK(soft.steps[t].node_state == hard[t].node_state);
    CHECK(soft.steps[t].edge_state == hard[t].edge_state);
  }
}

TEST_CASE("untrained parameters still produce valid one-hot states") {
  ModelParams mp = init_model({TaskId::sp}, 32, 0, 77);
  NetTables nt = extract_tables(mp, TaskId::sp);
  for (int x : nt.node_next) CHECK((x >= 0 && x < nt.k_nodes));
  for (int x : nt.edge_next) CHECK((x >= 0 && x < nt.k_edges));
  Graph g = make_task_instance(TaskId::sp, 8, 3);
  auto steps = hard_rollout(nt, g, 10);
  for (const auto& s : steps) {
    for (int v : s.node_state) CHECK((v >= 0 && v < nt.k_nodes));
    for (int e : s.edge_state) CHECK((e >= 0 && e < nt.k_edges));
  }
}

TEST_CASE("full teacher-forced step loss passes a 64-bit gradient check") {
  // small hidden size keeps the parameter count tractable for differencing
  ModelParams mp = init_model({TaskId::bfs}, 16, 0, 21);
  Graph g = make_task_instance(TaskId::bfs, 4, 9);
  GraphView gv(g);
  HintTrajectory traj = run_reference(TaskId::bfs, g);
  // single-step trajectory slice
  HintTrajectory one;
  one.task = traj.task;
  one.steps = {traj.steps[0], traj.steps[1]};
  one.outputs = traj.outputs;
  // link outputs to the sliced final step: keep pointer loss well-defined by
  // using the full trajectory when the final state carries the tree
  const HintTrajectory& used = traj;

  // pure-double parameter vector, injected directly as tape leaves
  auto lift_from = [&](TapeD& tape, const std::vector<double>& x, bool grad) {
    ParamLeavesT<double> leaves;
    std::size_t pos = 0;
    for (const auto& b : mp.blocks) {
      std::vector<double> vals(x.begin() + pos, x.begin() + pos + b.v.size());
      pos += b.v.size();
      leaves.leaves.emplace(b.name, tape.leaf(b.rows, b.cols, std::move(vals), grad));
    }
    return leaves;
  };
  std::vector<double> x0;
  for (const auto& b : mp.blocks) x0.insert(x0.end(), b.v.begin(), b.v.end());
  auto eval_loss = [&](const std::vector<double>& x) {
    TapeD tape;
    auto leaves = lift_from(tape, x, false);
    return build_hint_loss<double>(tape, leaves, mp, gv, used, 3.0, 3.0).total.val()[0];
  };
  TapeD tape;
  auto leaves = lift_from(tape, x0, true);
  auto parts = build_hint_loss<double>(tape, leaves, mp, gv, used, 3.0, 3.0);
  tape.backward(parts.total);
  std::vector<double> analytic;
  for (const auto& b : mp.blocks) {
    const auto& gr = leaves.at(b.name).grad();
    analytic.insert(analytic.end(), gr.begin(), gr.end());
  }
  double err = finite_difference_check(eval_loss, x0, analytic, 1e-5);
  CHECK(err <= 1e-6);
}

TEST_CASE("perfect logits give near-zero hint loss") {
  // the golden model emits the reference trajectory with wide margins
  ModelParams golden = golden_model(TaskId::bfs);
  Graph g = make_task_instance(TaskId::bfs, 8, 12);
  auto traj = run_reference(TaskId::bfs, g);
  // sharpen the output margins so cross-entropy vanishes
  for (auto& b : golden.blocks)
    if (b.name.find("out_w") != std::string::npos)
      for (auto& v : b.v) v *= 8.0f;
  LossReport r = hint_losses(golden, g, traj, 0.01);
  CHECK(r.node_ce <= 1e-5);
  CHECK(r.edge_ce <= 1e-5);
  CHECK(r.scalar_mse <= 1e-8);
}
