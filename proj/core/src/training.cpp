#include "dgr/training.hpp"

#include <cmath>
#include <sstream>

#include "dgr/ablation.hpp"
#include "dgr/util.hpp"

namespace dgr {

double temperature_at(int step, const TrainConfig& cfg) {
  if (step < 0 || step >= cfg.steps) throw std::invalid_argument("temperature_at: step out of range");
  if (!(cfg.tau_start > 0) || !(cfg.tau_end > 0))
    throw std::invalid_argument("temperature_at: schedule endpoints must be positive");
  if (cfg.steps == 1) return cfg.tau_start;
  double frac = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
  return cfg.tau_start * std::pow(cfg.tau_end / cfg.tau_start, frac);
}

LossReport hint_losses(const ModelParams& mp, const Graph& g, const HintTrajectory& traj,
                       double tau) {
  GraphView gv(g);
  Tape tape;
  auto leaves = lift_params(tape, mp, false);
  auto parts = build_hint_loss<float>(tape, leaves, mp, gv, traj, static_cast<float>(tau),
                                      static_cast<float>(tau));
  LossReport r;
  r.node_ce = parts.node_ce.val()[0];
  r.edge_ce = parts.edge_ce.val()[0];
  r.scalar_mse = parts.scalar_mse.val()[0];
  r.parent_ce = parts.parent_ce.idx >= 0 ? parts.parent_ce.val()[0] : 0.0;
  r.total = parts.total.val()[0];
  return r;
}

TrainPool make_train_pool(TaskId task, const TrainConfig& cfg, std::uint64_t seed) {
  TrainPool pool;
  Rng rng = make_rng(seed, 71);
  for (int i = 0; i < cfg.pool_size; ++i) {
    int n = cfg.fixed_n > 0
                ? cfg.fixed_n
                : cfg.train_n_min + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                         cfg.train_n_max - cfg.train_n_min + 1));
    Graph g;
    if (cfg.er_p > 0.0) {
      std::uint64_t s = mix_seed(seed, 7000 + i);
      g = generate_er(n, cfg.er_p, mix_seed(s, 1));
      g = attach_task_scalars(std::move(g), task, mix_seed(s, 2));
      if (task_is_rooted(task)) {
        Rng r2 = make_rng(s, 3);
        g.start_node = static_cast<int>(r2() % static_cast<std::uint64_t>(n));
      }
      if (task_uses_virtual_node(task)) g = add_virtual_node(std::move(g));
    } else {
      g = make_task_instance(task, n, mix_seed(seed, 7000 + i));
    }
    pool.trajs.push_back(run_reference(task, g));
    pool.graphs.push_back(std::move(g));
  }
  return pool;
}

namespace {

void adam_apply(ModelParams& mp, const std::vector<std::vector<float>>& grads, AdamState& state,
                double lr) {
  std::vector<std::vector<float>> values(mp.blocks.size());
  std::vector<std::string> names(mp.blocks.size());
  for (std::size_t i = 0; i < mp.blocks.size(); ++i) {
    values[i] = std::move(mp.blocks[i].v);
    names[i] = mp.blocks[i].name;
  }
  adam_step(values, grads, names, state, lr);
  for (std::size_t i = 0; i < mp.blocks.size(); ++i) mp.blocks[i].v = std::move(values[i]);
}

bool finite(double x) { return std::isfinite(x); }

TrainResult train_loop(const TrainConfig& cfg, bool multitask) {
  TrainResult res;
  res.config = cfg;
  if (cfg.tasks.empty()) throw std::invalid_argument("train: no tasks");
  ModelParams mp = init_model(cfg.tasks, cfg.hidden, cfg.head_count, cfg.seed, cfg.nohint_k);
  if (cfg.variant == "soft_attention") mp.hard_aggregation = false;
  if (cfg.variant == "ndsu") {
    mp.variant = "ndsu";
    for (TaskId t : cfg.tasks) add_ndsu_blocks(mp, t, cfg.seed);
  }

  std::vector<TrainPool> pools;
  for (std::size_t i = 0; i < cfg.tasks.size(); ++i)
    pools.push_back(make_train_pool(cfg.tasks[i], cfg, mix_seed(cfg.seed, 300 + i)));

  AdamState adam;
  Rng batch_rng = make_rng(cfg.seed, 55);
  Rng gumbel_rng = make_rng(cfg.seed, 56);
  ModelParams last_good = mp;

  for (int step = 0; step < cfg.steps; ++step) {
    const float tau = static_cast<float>(temperature_at(step, cfg));
    std::vector<std::vector<float>> grads(mp.blocks.size());
    for (std::size_t i = 0; i < mp.blocks.size(); ++i)
      grads[i].assign(mp.blocks[i].v.size(), 0.0f);

    MetricsRecord rec;
    rec.step = step;
    rec.tau = tau;
    bool bad = false;
    for (std::size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
      TaskId task = cfg.tasks[ti];
      const TrainPool& pool = pools[ti];
      double task_total = 0.0;
      std::vector<std::vector<float>> task_grads(mp.blocks.size());
      for (std::size_t i = 0; i < mp.blocks.size(); ++i)
        task_grads[i].assign(mp.blocks[i].v.size(), 0.0f);
      for (int b = 0; b < cfg.batch; ++b) {
        int gi = static_cast<int>(batch_rng() % pool.graphs.size());
        const Graph& g = pool.graphs[gi];
        GraphView gv(g);
        Tape tape;
        auto leaves = lift_params(tape, mp, true);
        const float tau_attn = cfg.variant == "soft_attention" ? 1.0f : tau;
        if (cfg.hints) {
          auto parts =
              mp.variant == "ndsu"
                  ? build_hint_loss_ndsu<float>(tape, leaves, mp, gv, pool.trajs[gi], tau, tau_attn)
                  : build_hint_loss<float>(tape, leaves, mp, gv, pool.trajs[gi], tau, tau_attn);
          tape.backward(parts.total);
          harvest_grads(tape, leaves, mp, task_grads);
          rec.loss.node_ce += parts.node_ce.val()[0];
          rec.loss.edge_ce += parts.edge_ce.val()[0];
          rec.loss.scalar_mse += parts.scalar_mse.val()[0];
          rec.loss.parent_ce += parts.parent_ce.idx >= 0 ? parts.parent_ce.val()[0] : 0.0;
          rec.loss.total += parts.total.val()[0];
          task_total += parts.total.val()[0];
        } else {
          auto loss = build_no_hint_loss<float>(tape, leaves, mp, gv, task,
                                                pool.trajs[gi].step_count(), tau, gumbel_rng);
          tape.backward(loss);
          harvest_grads(tape, leaves, mp, task_grads);
          rec.loss.parent_ce += loss.val()[0];
          rec.loss.total += loss.val()[0];
          task_total += loss.val()[0];
        }
      }
      // batch-mean gradient per task, summed across tasks
      for (std::size_t i = 0; i < grads.size(); ++i)
        for (std::size_t j = 0; j < grads[i].size(); ++j)
          grads[i][j] += task_grads[i][j] / static_cast<float>(cfg.batch);
      if (multitask) rec.loss.per_task_total[task_name(task)] = task_total / cfg.batch;
      if (!finite(task_total)) bad = true;
    }
    const double denom = static_cast<double>(cfg.batch) * cfg.tasks.size();
    rec.loss.node_ce /= denom;
    rec.loss.edge_ce /= denom;
    rec.loss.scalar_mse /= denom;
    rec.loss.parent_ce /= denom;
    rec.loss.total /= denom;
    res.history.push_back(rec);

    if (bad || !finite(rec.loss.total)) {
      res.diverged = true;
      res.params = last_good;  // abort with the last finite parameters
      return res;
    }
    last_good = mp;
    adam_apply(mp, grads, adam, cfg.lr);
  }
  res.params = std::move(mp);
  return res;
}

}  // namespace

TrainResult train_single_task(const TrainConfig& cfg) {
  if (cfg.tasks.size() != 1) throw std::invalid_argument("train_single_task: one task expected");
  return train_loop(cfg, false);
}

TrainResult train_multitask(const TrainConfig& cfg) {
  if (cfg.tasks.size() < 2) throw std::invalid_argument("train_multitask: several tasks expected");
  return train_loop(cfg, true);
}

TrainResult train_no_hint(const TrainConfig& cfg) {
  if (cfg.hints) throw std::invalid_argument("train_no_hint: hint_mode must be no-hints");
  if (cfg.nohint_k < 2)
    throw std::invalid_argument("train_no_hint: at least two latent states are required");
  if (cfg.tasks.size() != 1) throw std::invalid_argument("train_no_hint: one task expected");
  return train_loop(cfg, false);
}

std::string format_metrics(const std::vector<MetricsRecord>& history) {
  std::ostringstream out;
  for (const auto& r : history) {
    out << "step=" << r.step << " tau=" << r.tau << " total=" << r.loss.total
        << " node_ce=" << r.loss.node_ce << " edge_ce=" << r.loss.edge_ce
        << " parent_ce=" << r.loss.parent_ce << " mse=" << r.loss.scalar_mse;
    for (const auto& [k, v] : r.loss.per_task_total) out << " " << k << "=" << v;
    out << "\n";
  }
  return out.str();
}

}  // namespace dgr
