#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "common.hpp"
#include "dgr/checkpoint.hpp"
#include "dgr/processor.hpp"
#include "dgr/training.hpp"
#include "dgr/util.hpp"

using namespace dgr;

TEST_CASE("temperature schedule hits both endpoints and decreases") {
  TrainConfig cfg;
  cfg.steps = 1000;
  CHECK(temperature_at(0, cfg) == 3.0);
  CHECK(temperature_at(999, cfg) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(temperature_at(500, cfg) ==
        doctest::Approx(std::sqrt(0.03) * std::pow(0.01 / 3.0, 0.5 / 999.0)).epsilon(1e-4));
  // geometric midpoint of an odd grid sits within 1e-4 of sqrt(3*0.01)
  CHECK(std::abs(temperature_at(500, cfg) - std::sqrt(0.03)) /
            std::sqrt(0.03) <= 2e-3);
  double prev = 1e9;
  for (int s = 0; s < 1000; s += 7) {
    double t = temperature_at(s, cfg);
    CHECK(t < prev);
    prev = t;
  }
  CHECK_THROWS_AS(temperature_at(1000, cfg), std::invalid_argument);
}

TEST_CASE("uniform logits cost ln k per element") {
  // two-state uniform logits: model with all-zero parameters
  ModelParams mp = init_model({TaskId::bfs}, 16, 0, 5);
  for (auto& b : mp.blocks) std::fill(b.v.begin(), b.v.end(), 0.0f);
  Graph g = make_task_instance(TaskId::bfs, 6, 3);
  auto traj = run_reference(TaskId::bfs, g);
  LossReport r = hint_losses(mp, g, traj, 1.0);
  CHECK(r.node_ce == doctest::Approx(std::log(2.0)).epsilon(1e-5));
  CHECK(r.edge_ce == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("scalar mse of the reference against itself is zero") {
  // golden gates reproduce the trajectory exactly
  ModelParams golden = golden_model(TaskId::sp);
  Graph g = make_task_instance(TaskId::sp, 8, 4);
  auto traj = run_reference(TaskId::sp, g);
  LossReport r = hint_losses(golden, g, traj, 0.01);
  CHECK(r.scalar_mse <= 1e-10);
}

TEST_CASE("teacher forcing isolates steps") {
  // losses at step t depend only on step t inputs: evaluating on a
  // trajectory whose earlier steps are corrupted must leave later per-step
  // losses unchanged. We check total loss equality between two trajectories
  // that differ only in the final step's input (all earlier steps equal).
  ModelParams mp = init_model({TaskId::bfs}, 32, 0, 8);
  Graph g = make_task_instance(TaskId::bfs, 8, 11);
  GraphView gv(g);
  auto traj = run_reference(TaskId::bfs, g);
  REQUIRE(traj.step_count() >= 2);
  // per-step loss of the final step, computed in isolation
  HintTrajectory tail;
  tail.task = traj.task;
  tail.steps = {traj.steps[traj.step_count() - 1], traj.steps[traj.step_count()]};
  // corrupt an earlier step in a copy; the tail slice is untouched
  HintTrajectory corrupted = traj;
  corrupted.steps[0].node_state[0] ^= 1;
  Tape t1, t2;
  auto l1 = lift_params(t1, mp, false);
  auto l2 = lift_params(t2, mp, false);
  auto p1 = build_hint_loss<float>(t1, l1, mp, gv, traj, 1.0f, 1.0f);
  auto p2 = build_hint_loss<float>(t2, l2, mp, gv, corrupted, 1.0f, 1.0f);
  // only step-0 terms may differ; compute the step-0 contribution directly
  HintTrajectory head0;
  head0.task = traj.task;
  head0.steps = {traj.steps[0], traj.steps[1]};
  HintTrajectory head0c = head0;
  head0c.steps[0] = corrupted.steps[0];
  // strip pointer losses by comparing CE sums scaled back to per-step form
  const int T = traj.step_count();
  Tape t3, t4;
  auto l3 = lift_params(t3, mp, false);
  auto l4 = lift_params(t4, mp, false);
  auto q1 = build_hint_loss<float>(t3, l3, mp, gv, head0, 1.0f, 1.0f);
  auto q2 = build_hint_loss<float>(t4, l4, mp, gv, head0c, 1.0f, 1.0f);
  double full_diff = p2.node_ce.val()[0] - p1.node_ce.val()[0];
  double head_diff = (q2.node_ce.val()[0] - q1.node_ce.val()[0]) / T;
  CHECK(full_diff == doctest::Approx(head_diff).epsilon(1e-4));
}

TEST_CASE("tiny training runs are deterministic") {
  TrainConfig cfg;
  cfg.tasks = {TaskId::bfs};
  cfg.steps = 8;
  cfg.batch = 4;
  cfg.pool_size = 16;
  cfg.seed = 4;
  cfg.hidden = 32;
  TrainResult a = train_single_task(cfg);
  TrainResult b = train_single_task(cfg);
  REQUIRE(a.params.blocks.size() == b.params.blocks.size());
  for (std::size_t i = 0; i < a.params.blocks.size(); ++i)
    CHECK(a.params.blocks[i].v == b.params.blocks[i].v);  // bit-identical
  CHECK(a.history.back().loss.total == b.history.back().loss.total);
}

TEST_CASE("loss decreases on a short bfs run") {
  TrainConfig cfg;
  cfg.tasks = {TaskId::bfs};
  cfg.steps = 120;
  cfg.batch = 8;
  cfg.pool_size = 64;
  cfg.seed = 0;
  cfg.hidden = 32;
  TrainResult r = train_single_task(cfg);
  REQUIRE_FALSE(r.diverged);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) first += r.history[i].loss.total;
  for (int i = 0; i < 10; ++i) last += r.history[r.history.size() - 1 - i].loss.total;
  CHECK(last < 0.5 * first);
}

TEST_CASE("checkpoint round trips are byte-exact") {
  namespace fs = std::filesystem;
  const std::string p1 = (fs::temp_directory_path() / "dgr_ck1.bin").string();
  const std::string p2 = (fs::temp_directory_path() / "dgr_ck2.bin").string();
  ModelParams mp = init_model({TaskId::sp}, 32, 0, 17);
  TrainConfig cfg;
  cfg.tasks = {TaskId::sp};
  cfg.seed = 17;
  save_checkpoint(mp, cfg, p1);
  Checkpoint ck = load_checkpoint(p1);
  save_checkpoint(ck.params, ck.config, p2);
  CHECK(read_text_file(p1) == read_text_file(p2));

  SUBCASE("manifest records the annealing schedule") {
    std::string body = read_text_file(p1);
    CHECK(body.find("tau_start") != std::string::npos);
    CHECK(body.find("tau_end") != std::string::npos);
    CHECK(body.find("geometric") != std::string::npos);
  }
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint guards") {
  namespace fs = std::filesystem;
  const std::string p1 = (fs::temp_directory_path() / "dgr_ck3.bin").string();
  ModelParams mp = init_model({TaskId::bfs}, 32, 0, 3);
  TrainConfig cfg;
  cfg.tasks = {TaskId::bfs};
  save_checkpoint(mp, cfg, p1);
  SUBCASE("loading for the wrong task fails") {
    CHECK_THROWS_AS(load_checkpoint_for_task(p1, TaskId::sp), std::invalid_argument);
    CHECK_NOTHROW(load_checkpoint_for_task(p1, TaskId::bfs));
  }
  SUBCASE("corruption is caught by the checksum") {
    std::string body = read_text_file(p1);
    body[body.size() / 2] ^= 0x40;
    write_text_file(p1, body);
    CHECK_THROWS_AS(load_checkpoint(p1), IoError);
  }
  std::remove(p1.c_str());
}

TEST_CASE("divergence aborts with the last finite parameters") {
  TrainConfig cfg;
  cfg.tasks = {TaskId::bfs};
  cfg.steps = 20;
  cfg.batch = 2;
  cfg.pool_size = 8;
  cfg.hidden = 32;
  cfg.lr = 1e18;  // drives the loss non-finite within a few steps
  TrainResult r = train_single_task(cfg);
  CHECK(r.diverged);
  for (const auto& b : r.params.blocks)
    for (float v : b.v) CHECK(std::isfinite(v));
}
