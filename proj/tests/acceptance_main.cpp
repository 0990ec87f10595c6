// Acceptance gate: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <vector>

#include "common.hpp"
#include "dgr/ablation.hpp"
#include "dgr/certifier.hpp"
#include "dgr/checkpoint.hpp"
#include "dgr/eval.hpp"
#include "dgr/processor.hpp"
#include "dgr/training.hpp"
#include "dgr/util.hpp"
#include "oracles.hpp"

using namespace dgr;
using Clock = std::chrono::steady_clock;

namespace {

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

struct Criterion {
  int id;
  bool pass = true;
  bool gating = true;
  std::string detail;
};

std::vector<Criterion> results;

void report(int id, bool pass, const std::string& detail, bool gating = true) {
  results.push_back({id, pass, gating, detail});
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << " — " << detail
            << std::endl;
}

bool perfect(const EvalReport& rep, bool graph_only) {
  for (const auto& ps : rep.sizes) {
    if (ps.graph_level < 1.0) return false;
    if (!graph_only && ps.node_level < 1.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

struct TrainedSeed {
  TaskId task;
  std::uint64_t seed;
  ModelParams params;
  bool perfect_eval = false;
};
std::vector<TrainedSeed> trained_checkpoints;  // shared between criteria 1 and 2

void criterion1() {
  auto t0 = Clock::now();
  const int seeds = 5, graphs = 100;
  const std::vector<int> sizes = {16, 80, 160};
  bool all_pass = true;
  std::string detail;
  for (TaskId task : kAllTasks) {
    int good = 0;
    double worst_minutes = 0;
    for (int seed = 0; seed < seeds; ++seed) {
      auto r0 = Clock::now();
      TrainConfig cfg;
      cfg.tasks = {task};
      cfg.seed = seed;
      TrainResult tr = train_single_task(cfg);
      double train_min = minutes_since(r0);
      EvalReport rep = evaluate(tr.params, task, sizes, graphs, mix_seed(1000, seed));
      bool ok = !tr.diverged && perfect(rep, task == TaskId::ecc);
      if (ok) ++good;
      worst_minutes = std::max(worst_minutes, train_min);
      trained_checkpoints.push_back({task, static_cast<std::uint64_t>(seed), tr.params, ok});
      std::cout << "  [c1] " << task_name(task) << " seed " << seed << ": "
                << (ok ? "100/100 at all sizes" : "imperfect") << " (" << train_min
                << " min train)\n"
                << rep.summary();
    }
    double budget = task == TaskId::dfs ? 60.0 : 25.0;
    bool task_pass = good >= 4 && worst_minutes <= budget;
    all_pass = all_pass && task_pass;
    detail += std::string(task_name(task)) + "=" + std::to_string(good) + "/5 ";
  }
  report(1, all_pass, "single-task perfect generalization: " + detail +
                          "(total " + std::to_string(minutes_since(t0)) + " min)");
}

void criterion2() {
  auto t0 = Clock::now();
  bool all_pass = true;
  std::string detail;
  int certified = 0, expected = 0;
  if (trained_checkpoints.empty()) {
    // allow running criterion 2 standalone on freshly trained seeds
    for (TaskId task : kAllTasks) {
      TrainConfig cfg;
      cfg.tasks = {task};
      cfg.seed = 0;
      TrainResult tr = train_single_task(cfg);
      EvalReport rep = evaluate(tr.params, task, {16, 80, 160}, 100, 17);
      trained_checkpoints.push_back(
          {task, 0, tr.params, perfect(rep, task == TaskId::ecc)});
    }
  }
  for (const auto& tc : trained_checkpoints) {
    if (!tc.perfect_eval) continue;
    ++expected;
    auto c0 = Clock::now();
    TransitionCertificate cert = certify(tc.params, tc.task);
    double secs = std::chrono::duration<double>(Clock::now() - c0).count();
    if (cert.pass && secs <= 10.0) {
      ++certified;
    } else {
      all_pass = false;
      detail += std::string(task_name(tc.task)) + "/seed" + std::to_string(tc.seed) +
                (cert.pass ? " slow" : " failed:" + std::to_string(cert.failed_count())) + " ";
    }
  }
  int random_fail = 0;
  for (int seed = 0; seed < 20; ++seed) {
    ModelParams mp = init_model({TaskId::bfs}, 64, 0, mix_seed(4242, seed));
    if (certify(mp, TaskId::bfs).failed_count() >= 1) ++random_fail;
  }
  if (random_fail != 20) all_pass = false;
  report(2, all_pass && expected > 0,
         "certification: " + std::to_string(certified) + "/" + std::to_string(expected) +
             " perfect checkpoints certified, " + std::to_string(random_fail) +
             "/20 random inits rejected " + detail + "(" +
             std::to_string(minutes_since(t0)) + " min)");
}

void criterion3() {
  auto t0 = Clock::now();
  const int seeds = 5;
  int good = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    auto r0 = Clock::now();
    TrainConfig cfg;
    cfg.tasks = std::vector<TaskId>(kAllTasks, kAllTasks + kTaskCount);
    cfg.steps = 10000;
    cfg.seed = seed;
    TrainResult tr = train_multitask(cfg);
    bool ok = !tr.diverged;
    for (TaskId task : kAllTasks) {
      EvalReport rep = evaluate(tr.params, task, {16, 80}, 100, mix_seed(3000, seed));
      ok = ok && perfect(rep, /*graph_only=*/true);
      std::cout << "  [c3] seed " << seed << " " << rep.summary();
    }
    double mins = minutes_since(r0);
    if (ok && mins <= 8 * 60.0) ++good;
    std::cout << "  [c3] seed " << seed << (ok ? " perfect" : " imperfect") << " (" << mins
              << " min)\n";
  }
  report(3, good >= 3,
         "multitask: " + std::to_string(good) + "/5 seeds perfect at sizes 16 and 80 (" +
             std::to_string(minutes_since(t0)) + " min)");
}

void criterion4() {
  auto t0 = Clock::now();
  SoftAttentionReport rep = ablate_soft_attention(0);
  std::cout << rep.summary();
  const double want[4] = {0.97, 0.86, 0.76, 0.38};
  bool pass = rep.in_distribution.sizes[0].node_level == 1.0 &&
              rep.in_distribution.sizes[0].graph_level == 1.0;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < rep.probes.size(); ++i)
    monotone = monotone && rep.probes[i].parent_weight > rep.probes[i + 1].parent_weight;
  pass = pass && monotone;
  for (std::size_t i = 0; i < rep.probes.size() && i < 4; ++i)
    pass = pass && std::abs(rep.probes[i].parent_weight - want[i]) <= 0.15;
  pass = pass && rep.probes.front().correct && !rep.probes.back().correct;
  report(4, pass, "soft-attention ablation: weights decay monotonically and the pointer breaks "
                  "at n=800 (" + std::to_string(minutes_since(t0)) + " min)");
}

void criterion5() {
  auto t0 = Clock::now();
  NdsuReport rep = ablate_nondiscrete_scalar(TaskId::sp, 0);
  std::cout << rep.summary();
  double at16 = rep.free_running.sizes[0].node_level;
  double at160 = rep.free_running.sizes[2].node_level;
  bool control = rep.teacher_scalars.sizes[0].node_level == 1.0 &&
                 rep.teacher_scalars.sizes[0].graph_level == 1.0;
  bool pass = at16 >= 0.95 && at160 <= 0.70 && control;
  report(5, pass,
         "non-discrete scalar update: node-level " + std::to_string(at16 * 100) + " at 16, " +
             std::to_string(at160 * 100) + " at 160; teacher-scalar control " +
             (control ? "perfect" : "imperfect") + " (" + std::to_string(minutes_since(t0)) +
             " min)");
}

void criterion6() {
  auto t0 = Clock::now();
  const int seeds = 5;
  int bfs_ok = 0, sp_ok = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    MinSizeReport b = ablate_min_train_size(TaskId::bfs, {3, 4}, mix_seed(60, seed));
    MinSizeReport d = ablate_min_train_size(TaskId::sp, {4, 5}, mix_seed(61, seed));
    std::cout << "  [c6] seed " << seed << "\n" << b.summary() << d.summary();
    if (b.node_level_at_160.at(3) < 0.99 && b.node_level_at_160.at(4) >= 0.999) ++bfs_ok;
    if (d.node_level_at_160.at(4) <= 0.50 && d.node_level_at_160.at(5) >= 0.999) ++sp_ok;
  }
  bool pass = bfs_ok >= 3 && sp_ok >= 3;
  report(6, pass,
         "minimal training sizes: bfs " + std::to_string(bfs_ok) + "/5, dijkstra " +
             std::to_string(sp_ok) + "/5 seeds show the expected threshold (" +
             std::to_string(minutes_since(t0)) + " min)");
}

void criterion7() {
  auto t0 = Clock::now();
  int good = 0;
  double blowup_seen = 0;
  for (int seed = 0; seed < 5; ++seed) {
    ExtendedOpsReport rep = run_extended_scalar_ops(seed);
    std::cout << "  [c7] seed " << seed << "\n" << rep.summary();
    bool ok = true;
    for (int f = 1; f <= 4; ++f) ok = ok && rep.discrete[f].second <= 1e-2;
    if (ok) ++good;
    double blowup = rep.continuous[3].second / std::max(rep.continuous[3].first, 1e-12);
    blowup_seen = std::max(blowup_seen, blowup);
  }
  double mins = minutes_since(t0);
  bool pass = good >= 4 && blowup_seen >= 10.0 && mins <= 5.0 * 5;  // five seeded runs
  report(7, pass,
         "extended scalar operations: " + std::to_string(good) +
             "/5 seeds fit f1..f4; continuous f3 train-to-test blow-up x" +
             std::to_string(blowup_seen) + " (" + std::to_string(mins) + " min)");
}

void criterion8() {
  auto t0 = Clock::now();
  auto results8 = no_hint_search({4, 5, 6}, {3, 4, 5}, {0.01, 0.1}, 5, 8);
  const NoHintResult& best = results8.front();
  std::cout << "  [c8] best no-hint model: n=" << best.train_n << " k=" << best.k
            << " tau_end=" << best.tau_end << " val " << best.val_node * 100 << "/"
            << best.val_graph * 100 << "\n";
  EvalReport at16 = evaluate(best.trained.params, TaskId::bfs, {16}, 100, 88);
  EvalReport at64 = evaluate(best.trained.params, TaskId::bfs, {64}, 100, 89);
  std::cout << at16.summary() << at64.summary();
  bool pass = at16.sizes[0].node_level >= 0.90 && at64.sizes[0].graph_level <= 0.10;
  report(8, pass,
         "no-hint bfs (best-effort, non-gating): node " +
             std::to_string(at16.sizes[0].node_level * 100) + " at 16, graph " +
             std::to_string(at64.sizes[0].graph_level * 100) + " at 64 (" +
             std::to_string(minutes_since(t0)) + " min)",
         /*gating=*/false);
}

void criterion9() {
  auto t0 = Clock::now();
  bool pass = true;
  std::string detail;

  // reference-oracle equivalences, 1000 graphs per task
  for (TaskId task : kAllTasks) {
    int failures = 0;
    for (int k = 0; k < 1000; ++k) {
      int n = 4 + static_cast<int>(mix_seed(900 + static_cast<int>(task), k) % 13);
      Graph g = make_task_instance(task, n, mix_seed(910 + static_cast<int>(task), k));
      auto traj = run_reference(task, g);
      switch (task) {
        case TaskId::bfs: {
          if (traj.outputs.parents != oracle::bfs_parents(g, *g.start_node)) ++failures;
          break;
        }
        case TaskId::dfs: {
          if (traj.outputs.parents != oracle::dfs_recursive(g, *g.start_node).parent) ++failures;
          break;
        }
        case TaskId::sp: {
          if (traj.outputs.parents != oracle::dijkstra_parents(g, *g.start_node)) ++failures;
          auto dist = oracle::bellman_ford(g, *g.start_node);
          const MachineSpec& m = machine_spec(task);
          const int tree = m.edge_state_id("tree");
          const int c = m.channel_id("dist");
          const StepState& last = traj.steps.back();
          for (int e = 0; e < g.edge_count(); ++e)
            if (last.edge_state[e] == tree && g.edges[e].receiver < real_node_count(g) &&
                std::abs(last.edge_values[c][e] - dist[g.edges[e].receiver]) > 1e-9)
              ++failures;
          break;
        }
        case TaskId::prim: {
          const auto& w = g.edge_scalars.at("weight");
          double total = 0;
          for (int v = 0; v < real_node_count(g); ++v) {
            int p = traj.outputs.parents[v];
            if (p < 0) ++failures;
            if (p == v || p < 0) continue;
            for (int e = 0; e < g.edge_count(); ++e)
              if (g.edges[e].sender == p && g.edges[e].receiver == v) total += w[e];
          }
          if (std::abs(total - oracle::kruskal_weight(g)) > 1e-9) ++failures;
          break;
        }
        case TaskId::mis: {
          if (!oracle::independent_and_maximal(g, traj.outputs.in_set)) ++failures;
          if (traj.outputs.in_set != oracle::luby_min_rounds(g)) ++failures;
          break;
        }
        case TaskId::ecc: {
          if (traj.outputs.eccentricity != oracle::eccentricity_of(g, *g.start_node)) ++failures;
          break;
        }
      }
    }
    if (failures > 0) {
      pass = false;
      detail += std::string(task_name(task)) + ":" + std::to_string(failures) + "fail ";
    }
  }

  // finite-difference checks on differentiable blocks and one full step
  {
    ModelParams mp = init_model({TaskId::bfs}, 16, 0, 77);
    Graph g = make_task_instance(TaskId::bfs, 4, 3);
    GraphView gv(g);
    HintTrajectory traj = run_reference(TaskId::bfs, g);
    std::vector<double> x0;
    for (const auto& b : mp.blocks) x0.insert(x0.end(), b.v.begin(), b.v.end());
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
    auto eval_loss = [&](const std::vector<double>& x) {
      TapeD tape;
      auto leaves = lift_from(tape, x, false);
      return build_hint_loss<double>(tape, leaves, mp, gv, traj, 3.0, 3.0).total.val()[0];
    };
    TapeD tape;
    auto leaves = lift_from(tape, x0, true);
    auto parts = build_hint_loss<double>(tape, leaves, mp, gv, traj, 3.0, 3.0);
    tape.backward(parts.total);
    std::vector<double> analytic;
    for (const auto& b : mp.blocks) {
      const auto& gr = leaves.at(b.name).grad();
      analytic.insert(analytic.end(), gr.begin(), gr.end());
    }
    double err = finite_difference_check(eval_loss, x0, analytic, 1e-5);
    if (err > 1e-6) {
      pass = false;
      detail += "full-step-grad:" + std::to_string(err) + " ";
    }
  }

  // softmax segment normalization at 1e-6
  {
    Rng rng = make_rng(5);
    std::uniform_real_distribution<float> d(-4.0f, 4.0f);
    Tape tape;
    std::vector<float> logits(200);
    std::vector<int> seg(200);
    for (int i = 0; i < 200; ++i) {
      logits[i] = d(rng);
      seg[i] = i % 13;
    }
    auto w = ops::segment_softmax(tape.leaf(200, 1, logits, false), seg, 13, 3.0f);
    std::vector<double> sums(13, 0.0);
    for (int i = 0; i < 200; ++i) sums[seg[i]] += w.val()[i];
    for (double s : sums)
      if (std::abs(s - 1.0) > 1e-6) {
        pass = false;
        detail += "softmax-norm ";
      }
  }

  // round trips
  {
    namespace fs = std::filesystem;
    const std::string d1 = (fs::temp_directory_path() / "dgr_acc_ds.jsonl").string();
    DatasetSplit split;
    split.task = TaskId::sp;
    split.seed = 4;
    for (int i = 0; i < 8; ++i) split.graphs.push_back(make_task_instance(TaskId::sp, 12, i));
    write_dataset(split, d1);
    auto back = read_dataset(d1);
    bool same = back.graphs.size() == split.graphs.size();
    for (std::size_t i = 0; same && i < back.graphs.size(); ++i)
      same = back.graphs[i].edges == split.graphs[i].edges &&
             back.graphs[i].edge_scalars == split.graphs[i].edge_scalars &&
             back.graphs[i].node_scalars == split.graphs[i].node_scalars;
    if (!same) {
      pass = false;
      detail += "dataset-roundtrip ";
    }
    const std::string c1 = (fs::temp_directory_path() / "dgr_acc_ck1").string();
    const std::string c2 = (fs::temp_directory_path() / "dgr_acc_ck2").string();
    ModelParams mp = init_model({TaskId::prim}, 64, 0, 5);
    TrainConfig cfg;
    cfg.tasks = {TaskId::prim};
    save_checkpoint(mp, cfg, c1);
    save_checkpoint(load_checkpoint(c1).params, load_checkpoint(c1).config, c2);
    if (read_text_file(c1) != read_text_file(c2)) {
      pass = false;
      detail += "checkpoint-roundtrip ";
    }
    std::remove(d1.c_str());
    std::remove(c1.c_str());
    std::remove(c2.c_str());
  }

  double mins = minutes_since(t0);
  if (mins > 5.0) {
    pass = false;
    detail += "overtime ";
  }
  report(9, pass, "property suite: oracles, gradients, normalization, round trips " + detail +
                      "(" + std::to_string(mins) + " min)");
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);

  auto want = [&](int id) { return only == 0 || only == id; };
  if (want(1)) criterion1();
  if (want(2)) criterion2();
  if (want(3)) criterion3();
  if (want(4)) criterion4();
  if (want(5)) criterion5();
  if (want(6)) criterion6();
  if (want(7)) criterion7();
  if (want(8)) criterion8();
  if (want(9)) criterion9();

  bool ok = true;
  for (const auto& c : results)
    if (c.gating && !c.pass) ok = false;
  std::cout << (ok ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << std::endl;
  return ok ? 0 : 1;
}
