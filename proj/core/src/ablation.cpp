#include "dgr/ablation.hpp"

#include <cmath>
#include <sstream>

#include "dgr/certifier.hpp"
#include "dgr/processor.hpp"
#include "dgr/util.hpp"

namespace dgr {

namespace {
constexpr int kNdsuDim = 32;
}

void add_ndsu_blocks(ModelParams& mp, TaskId task, std::uint64_t seed) {
  const MachineSpec& m = machine_spec(task);
  const int C = m.channel_count();
  const int h = mp.hidden;
  const int d = kNdsuDim;
  const std::string p = task_prefix(task) + "ndsu/";
  mp.add(p + "a1", h, d);
  mp.add(p + "a2", C, d);
  mp.add(p + "a0", d, 1);
  mp.add(p + "b1", h, d);
  mp.add(p + "b2", C, d);
  mp.add(p + "b0", d, 1);
  for (const char* w : {"wq", "wk", "wke", "wv"}) mp.add(p + w, d, d);
  mp.add(p + "on_u", d, C);
  mp.add(p + "on_m", d, C);
  mp.add(p + "on_b", C, 1);
  mp.add(p + "oe_f", d, C);
  mp.add(p + "oe_a", d, C);
  mp.add(p + "oe_b", d, C);
  mp.add(p + "oe_bias", C, 1);
  Rng rng = make_rng(seed, 909);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (auto& b : mp.blocks) {
    if (b.name.find("ndsu/") == std::string::npos) continue;
    if (b.name.ends_with("a0") || b.name.ends_with("b0") || b.name.ends_with("_b") ||
        b.name.ends_with("bias"))
      continue;
    for (auto& x : b.v) x = normal(rng) / std::sqrt(static_cast<float>(b.rows));
  }
}

// Single-layer attention regressor over (states, scalars) predicting the
// next scalar values; shares nothing with the gated path.
template <typename Real>
static std::pair<TensorRef<Real>, TensorRef<Real>> ndsu_scalar_predictions(
    TapeT<Real>& tape, const ParamLeavesT<Real>& lv, const ModelParams& mp, TaskId task,
    const GraphView& gv, const StepState& s) {
  using namespace ops;
  const MachineSpec& m = machine_spec(task);
  const Graph& g = *gv.g;
  const int n = g.node_count;
  const int E = g.edge_count();
  const int C = m.channel_count();
  const std::string tp = task_prefix(task);
  const std::string p = tp + "ndsu/";

  std::vector<Real> ns_vals(static_cast<std::size_t>(n) * C), es_vals(static_cast<std::size_t>(E) * C);
  for (int c = 0; c < C; ++c) {
    for (int v = 0; v < n; ++v) ns_vals[v * C + c] = static_cast<Real>(s.node_values[c][v]);
    for (int e = 0; e < E; ++e) es_vals[e * C + c] = static_cast<Real>(s.edge_values[c][e]);
  }
  auto sn = tape.leaf(n, C, std::move(ns_vals), false);
  auto se = tape.leaf(E, C, std::move(es_vals), false);

  auto u = relu(add_row_bias(
      add(gather_rows(matmul(lv.at(tp + "node_emb"), lv.at(p + "a1")), s.node_state),
          matmul(sn, lv.at(p + "a2"))),
      lv.at(p + "a0")));
  auto f = relu(add_row_bias(
      add(gather_rows(matmul(lv.at(tp + "edge_emb"), lv.at(p + "b1")), s.edge_state),
          matmul(se, lv.at(p + "b2"))),
      lv.at(p + "b0")));

  std::vector<int> send(E), recv(E), rev(E);
  for (int e = 0; e < E; ++e) {
    send[e] = g.edges[e].sender;
    recv[e] = g.edges[e].receiver;
    rev[e] = gv.reverse_edge[e];
  }
  auto q = matmul(u, lv.at(p + "wq"));
  auto k = matmul(u, lv.at(p + "wk"));
  auto ke = matmul(f, lv.at(p + "wke"));
  auto v = matmul(u, lv.at(p + "wv"));
  auto logits = scale(row_sum(mul(gather_rows(q, recv), add(gather_rows(k, send), ke))),
                      Real(1) / std::sqrt(static_cast<Real>(kNdsuDim)));
  auto w = segment_softmax(logits, recv, n, Real(1));
  auto msg = segment_sum(scale_rows(gather_rows(v, send), w), recv, n);

  auto next_n = add_row_bias(add(matmul(u, lv.at(p + "on_u")), matmul(msg, lv.at(p + "on_m"))),
                             lv.at(p + "on_b"));
  auto slot_a = scale_rows(gather_rows(v, send), w);
  auto slot_b = scale_rows(gather_rows(v, recv), gather_rows(w, rev));
  auto next_e = add_row_bias(add(matmul(f, lv.at(p + "oe_f")),
                                 add(matmul(slot_a, lv.at(p + "oe_a")),
                                     matmul(slot_b, lv.at(p + "oe_b")))),
                             lv.at(p + "oe_bias"));
  return {next_n, next_e};
}

template <typename Real>
HintLossParts<Real> build_hint_loss_ndsu(TapeT<Real>& tape, const ParamLeavesT<Real>& lv,
                                         const ModelParams& mp, const GraphView& gv,
                                         const HintTrajectory& traj, Real tau, Real tau_attn) {
  using namespace ops;
  const MachineSpec& m = machine_spec(traj.task);
  const int C = m.channel_count();
  // state losses from the standard path (its gate MSE is detached below)
  HintLossParts<Real> parts = build_hint_loss(tape, lv, mp, gv, traj, tau, tau_attn);
  TensorRef<Real> mse{};
  const int T = traj.step_count();
  for (int t = 0; t < T; ++t) {
    auto [next_n, next_e] =
        ndsu_scalar_predictions(tape, lv, mp, traj.task, gv, traj.steps[t]);
    const StepState& target = traj.steps[t + 1];
    const Graph& g = *gv.g;
    std::vector<Real> tn(static_cast<std::size_t>(g.node_count) * C);
    std::vector<Real> te(static_cast<std::size_t>(g.edge_count()) * C);
    for (int c = 0; c < C; ++c) {
      for (int v = 0; v < g.node_count; ++v) tn[v * C + c] = static_cast<Real>(target.node_values[c][v]);
      for (int e = 0; e < g.edge_count(); ++e) te[e * C + c] = static_cast<Real>(target.edge_values[c][e]);
    }
    auto both = add(mse_to_const(next_n, tn), mse_to_const(next_e, te));
    mse = t == 0 ? both : add(mse, both);
  }
  parts.scalar_mse = scale(mse, Real(1) / Real(2 * T));
  parts.total = add(add(parts.node_ce, parts.edge_ce), parts.scalar_mse);
  if (parts.parent_ce.idx >= 0) parts.total = add(parts.total, parts.parent_ce);
  return parts;
}

template HintLossParts<float> build_hint_loss_ndsu(TapeT<float>&, const ParamLeavesT<float>&,
                                                   const ModelParams&, const GraphView&,
                                                   const HintTrajectory&, float, float);
template HintLossParts<double> build_hint_loss_ndsu(TapeT<double>&, const ParamLeavesT<double>&,
                                                    const ModelParams&, const GraphView&,
                                                    const HintTrajectory&, double, double);

TaskOutput ndsu_predict_outputs(const ModelParams& mp, TaskId task, const Graph& g, int steps,
                                const HintTrajectory* teacher_scalars) {
  NetTables nt = extract_tables(mp, task);
  GraphView gv(g);
  StepState s = encode_inputs(g, task);
  const MachineSpec& m = machine_spec(task);
  for (int t = 0; t < steps; ++t) {
    if (teacher_scalars) {
      const StepState& ref = teacher_scalars->steps[std::min<std::size_t>(
          t, teacher_scalars->steps.size() - 1)];
      s.node_values = ref.node_values;
      s.edge_values = ref.edge_values;
    }
    // states move by the extracted tables; scalars by the regressor
    StepState next = hard_step(nt, gv, s);
    if (!teacher_scalars) {
      Tape tape;
      auto lv = lift_params(tape, mp, false);
      auto [pn, pe] = ndsu_scalar_predictions<float>(tape, lv, mp, task, gv, s);
      const int C = m.channel_count();
      for (int c = 0; c < C; ++c) {
        for (int v = 0; v < g.node_count; ++v) next.node_values[c][v] = pn.val()[v * C + c];
        for (int e = 0; e < g.edge_count(); ++e) next.edge_values[c][e] = pe.val()[e * C + c];
      }
    }
    s = std::move(next);
  }
  return decode_outputs(s, g, task);
}

NdsuReport ablate_nondiscrete_scalar(TaskId task, std::uint64_t seed,
                                     const std::vector<int>& sizes) {
  TrainConfig cfg;
  cfg.tasks = {task};
  cfg.seed = seed;
  cfg.variant = "ndsu";
  TrainResult tr = train_single_task(cfg);

  NdsuReport rep;
  rep.free_running.task = task;
  rep.free_running.seed = seed;
  rep.teacher_scalars.task = task;
  rep.teacher_scalars.seed = seed;
  const int n_graphs = 100;
  for (int size : sizes) {
    EvalReport::PerSize fr{size, n_graphs, 0.0, 0.0}, tf{size, n_graphs, 0.0, 0.0};
    double fr_nodes = 0, tf_nodes = 0;
    int fr_ok = 0, tf_ok = 0;
    for (int i = 0; i < n_graphs; ++i) {
      Graph g = make_task_instance(task, size, mix_seed(seed, size * 10000 + i));
      HintTrajectory ref = run_reference(task, g);
      auto free_out = ndsu_predict_outputs(tr.params, task, g, ref.step_count(), nullptr);
      auto tf_out = ndsu_predict_outputs(tr.params, task, g, ref.step_count(), &ref);
      auto [c1, t1] = score_outputs(free_out, ref.outputs, task);
      auto [c2, t2] = score_outputs(tf_out, ref.outputs, task);
      fr_nodes += static_cast<double>(c1) / t1;
      tf_nodes += static_cast<double>(c2) / t2;
      fr_ok += c1 == t1;
      tf_ok += c2 == t2;
    }
    fr.node_level = fr_nodes / n_graphs;
    fr.graph_level = static_cast<double>(fr_ok) / n_graphs;
    tf.node_level = tf_nodes / n_graphs;
    tf.graph_level = static_cast<double>(tf_ok) / n_graphs;
    rep.free_running.sizes.push_back(fr);
    rep.teacher_scalars.sizes.push_back(tf);
  }
  return rep;
}

std::string NdsuReport::summary() const {
  std::ostringstream out;
  out << "scalar regressor, free-running scalars:\n" << free_running.summary();
  out << "control with teacher-forced ground-truth scalars:\n" << teacher_scalars.summary();
  return out.str();
}

SoftAttentionReport ablate_soft_attention(std::uint64_t seed, const std::vector<int>& probe_sizes) {
  TrainConfig cfg;
  cfg.tasks = {TaskId::bfs};
  cfg.seed = seed;
  cfg.variant = "soft_attention";
  TrainResult tr = train_single_task(cfg);

  SoftAttentionReport rep;
  rep.in_distribution = [&] {
    EvalReport r;
    r.task = TaskId::bfs;
    r.seed = seed;
    const int n_graphs = 100;
    EvalReport::PerSize ps{16, n_graphs, 0.0, 0.0};
    double nodes = 0;
    int ok = 0;
    for (int i = 0; i < n_graphs; ++i) {
      Graph g = make_task_instance(TaskId::bfs, 16, mix_seed(seed, 160000 + i));
      HintTrajectory ref = run_reference(TaskId::bfs, g);
      auto res = soft_infer_rollout(tr.params, TaskId::bfs, g, ref.step_count(), 1.0);
      auto pred = decode_outputs(res.steps.back(), g, TaskId::bfs);
      auto [c, t] = score_outputs(pred, ref.outputs, TaskId::bfs);
      nodes += static_cast<double>(c) / t;
      ok += c == t;
    }
    ps.node_level = nodes / n_graphs;
    ps.graph_level = static_cast<double>(ok) / n_graphs;
    r.sizes.push_back(ps);
    return r;
  }();

  for (int n : probe_sizes) {
    // start sits on the 2-side; its sibling (node 1) must adopt node 2, the
    // smallest-index node of the opposite side
    Graph g = make_bipartite_k2(n, seed);
    g = attach_task_scalars(std::move(g), TaskId::bfs, mix_seed(seed, n));
    int probe_edge = -1;
    for (int e = 0; e < g.edge_count(); ++e)
      if (g.edges[e].sender == 2 && g.edges[e].receiver == 1) probe_edge = e;
    HintTrajectory ref = run_reference(TaskId::bfs, g);
    auto res = soft_infer_rollout(tr.params, TaskId::bfs, g, ref.step_count(), 1.0, probe_edge);
    auto pred = decode_outputs(res.steps.back(), g, TaskId::bfs);
    SoftAttentionReport::Probe p;
    p.n = n;
    // the sibling adopts in the second step (its visited side appears after
    // the first flood step)
    p.parent_weight = res.probe_weight.size() > 1 ? res.probe_weight[1][0] : 0.0;
    p.correct = pred.parents.size() > 1 && pred.parents[1] == 2;
    rep.probes.push_back(p);
  }
  return rep;
}

std::string SoftAttentionReport::summary() const {
  std::ostringstream out;
  out << "soft aggregation, in-distribution:\n" << in_distribution.summary();
  out << "true-parent attention weight on complete bipartite probes:\n";
  for (const auto& p : probes)
    out << "  n=" << p.n << " weight=" << p.parent_weight << " " << (p.correct ? "(+)" : "(-)")
        << "\n";
  return out.str();
}

MinSizeReport ablate_min_train_size(TaskId task, const std::vector<int>& train_sizes,
                                    std::uint64_t seed, int eval_graphs) {
  MinSizeReport rep;
  rep.task = task;
  for (int n : train_sizes) {
    TrainConfig cfg;
    cfg.tasks = {task};
    cfg.seed = mix_seed(seed, n);
    cfg.fixed_n = n;
    cfg.er_p = 0.5;
    TrainResult tr = train_single_task(cfg);
    EvalReport ev = evaluate(tr.params, task, {160}, eval_graphs, mix_seed(seed, 160));
    double score = task == TaskId::ecc ? ev.sizes[0].graph_level : ev.sizes[0].node_level;
    rep.node_level_at_160[n] = score;
  }
  return rep;
}

std::string MinSizeReport::summary() const {
  std::ostringstream out;
  out << "task " << task_name(task) << " node-level at size 160 by training size:\n";
  for (const auto& [n, s] : node_level_at_160) out << "  n=" << n << ": " << s * 100.0 << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Extended scalar-operation study: one updater must learn a different
// arithmetic rule per discrete state, supervised only through the result.

namespace {

constexpr int kExtStates = 16, kExtOps = 5;

double ext_op(int op, double x, double y) {
  switch (op) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return std::cos(x);
    case 3: return x * y;
    case 4: return std::atan2(x, y);
  }
  return 0.0;
}

double ext_target(int state, double x, double y) {
  switch (state % 5) {
    case 0: return x;
    case 1: return std::cos(x);
    case 2: return std::cos(x) + x * y;
    case 3: return std::atan2(x, y);
    case 4: return 1.0 + x + std::atan2(x, y);
  }
  return 0.0;
}

}  // namespace

ExtendedOpsReport run_extended_scalar_ops(std::uint64_t seed) {
  const int emb_dim = 16, steps = 5000, batch = 256;
  // discrete updater: state embeddings + one activation logit per operation
  std::vector<std::vector<float>> dparams = {
      std::vector<float>(kExtStates * emb_dim),  // embeddings
      std::vector<float>(emb_dim * kExtOps),     // projection
      std::vector<float>(kExtOps, 0.0f),         // bias
  };
  std::vector<std::string> dnames = {"emb", "proj", "bias"};
  {
    Rng rng = make_rng(seed, 1);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (auto& x : dparams[0]) x = normal(rng);
    for (auto& x : dparams[1]) x = normal(rng) / 4.0f;
  }
  // continuous baseline: [onehot(state), x, y] -> 64 -> 64 -> 1
  const int in_dim = kExtStates + 2, hid = 64;
  std::vector<std::vector<float>> cparams = {
      std::vector<float>(in_dim * hid), std::vector<float>(hid, 0.0f),
      std::vector<float>(hid * hid),    std::vector<float>(hid, 0.0f),
      std::vector<float>(hid * 1),      std::vector<float>(1, 0.0f),
  };
  std::vector<std::string> cnames = {"w1", "b1", "w2", "b2", "w3", "b3"};
  {
    Rng rng = make_rng(seed, 2);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (auto& x : cparams[0]) x = normal(rng) / std::sqrt(static_cast<float>(in_dim));
    for (auto& x : cparams[2]) x = normal(rng) / std::sqrt(static_cast<float>(hid));
    for (auto& x : cparams[4]) x = normal(rng) / std::sqrt(static_cast<float>(hid));
  }

  auto sample = [&](Rng& rng, double lo, double hi, int& state, double& x, double& y) {
    std::uniform_real_distribution<double> ud(lo, hi);
    state = static_cast<int>(rng() % kExtStates);
    x = ud(rng);
    y = ud(rng);
  };

  AdamState dopt, copt;
  Rng rng = make_rng(seed, 3);
  TrainConfig sched;
  sched.steps = steps;
  for (int step = 0; step < steps; ++step) {
    float tau = static_cast<float>(temperature_at(step, sched));
    // one shared batch
    std::vector<int> st(batch);
    std::vector<double> xs(batch), ys(batch);
    for (int b = 0; b < batch; ++b) sample(rng, 0.5, 1.0, st[b], xs[b], ys[b]);

    {  // discrete updater step
      Tape tape;
      auto emb = tape.leaf(kExtStates, emb_dim, dparams[0], true);
      auto proj = tape.leaf(emb_dim, kExtOps, dparams[1], true);
      auto bias = tape.leaf(kExtOps, 1, dparams[2], true);
      auto acts = ops::sigmoid(
          ops::scale(ops::add_row_bias(ops::matmul(emb, proj), bias), 1.0f / tau));
      auto rows = ops::gather_rows(acts, st);  // [batch x ops]
      std::vector<float> opvals(static_cast<std::size_t>(batch) * kExtOps);
      std::vector<float> targets(batch);
      for (int b = 0; b < batch; ++b) {
        for (int o = 0; o < kExtOps; ++o)
          opvals[b * kExtOps + o] = static_cast<float>(ext_op(o, xs[b], ys[b]));
        targets[b] = static_cast<float>(ext_target(st[b], xs[b], ys[b]));
      }
      auto pred = ops::row_sum(ops::mul(rows, tape.leaf(batch, kExtOps, opvals, false)));
      auto loss = ops::mse_to_const(pred, targets);
      tape.backward(loss);
      std::vector<std::vector<float>> grads = {
          std::vector<float>(emb.grad().begin(), emb.grad().end()),
          std::vector<float>(proj.grad().begin(), proj.grad().end()),
          std::vector<float>(bias.grad().begin(), bias.grad().end())};
      adam_step(dparams, grads, dnames, dopt, 0.003);
    }
    {  // continuous baseline step
      Tape tape;
      auto w1 = tape.leaf(in_dim, hid, cparams[0], true);
      auto b1 = tape.leaf(hid, 1, cparams[1], true);
      auto w2 = tape.leaf(hid, hid, cparams[2], true);
      auto b2 = tape.leaf(hid, 1, cparams[3], true);
      auto w3 = tape.leaf(hid, 1, cparams[4], true);
      auto b3 = tape.leaf(1, 1, cparams[5], true);
      std::vector<float> input(static_cast<std::size_t>(batch) * in_dim, 0.0f);
      std::vector<float> targets(batch);
      for (int b = 0; b < batch; ++b) {
        input[b * in_dim + st[b]] = 1.0f;
        input[b * in_dim + kExtStates] = static_cast<float>(xs[b]);
        input[b * in_dim + kExtStates + 1] = static_cast<float>(ys[b]);
        targets[b] = static_cast<float>(ext_target(st[b], xs[b], ys[b]));
      }
      auto x = tape.leaf(batch, in_dim, std::move(input), false);
      auto h1 = ops::relu(ops::add_row_bias(ops::matmul(x, w1), b1));
      auto h2 = ops::relu(ops::add_row_bias(ops::matmul(h1, w2), b2));
      auto pred = ops::add_row_bias(ops::matmul(h2, w3), b3);
      auto loss = ops::mse_to_const(ops::row_sum(pred), targets);
      tape.backward(loss);
      std::vector<std::vector<float>> grads;
      for (auto t : {w1, b1, w2, b2, w3, b3})
        grads.emplace_back(t.grad().begin(), t.grad().end());
      adam_step(cparams, grads, cnames, copt, 0.003);
    }
  }

  // evaluation: hard activation bits for the discrete updater
  std::vector<std::array<int, kExtOps>> bits(kExtStates);
  for (int s = 0; s < kExtStates; ++s)
    for (int o = 0; o < kExtOps; ++o) {
      double logit = dparams[2][o];
      for (int d = 0; d < emb_dim; ++d)
        logit += static_cast<double>(dparams[0][s * emb_dim + d]) * dparams[1][d * kExtOps + o];
      bits[s][o] = logit > 0.0 ? 1 : 0;
    }
  ExtendedOpsReport rep;
  rep.discrete.resize(kExtOps);
  rep.continuous.resize(kExtOps);
  auto evaluate_split = [&](double lo, double hi, std::uint64_t stream, bool train_split) {
    Rng erng = make_rng(seed, stream);
    std::vector<double> dsum(kExtOps, 0.0), csum(kExtOps, 0.0);
    std::vector<int> counts(kExtOps, 0);
    const int samples = 5000;
    for (int i = 0; i < samples; ++i) {
      int st;
      double x, y;
      sample(erng, lo, hi, st, x, y);
      int f = st % 5;
      double truth = ext_target(st, x, y);
      double dpred = 0.0;
      for (int o = 0; o < kExtOps; ++o)
        if (bits[st][o]) dpred += ext_op(o, x, y);
      double cin[2] = {x, y};
      std::vector<double> h1(64, 0.0);
      for (int d = 0; d < 64; ++d) {
        double acc = cparams[1][d];
        acc += cparams[0][st * 64 + d];
        acc += cin[0] * cparams[0][kExtStates * 64 + d];
        acc += cin[1] * cparams[0][(kExtStates + 1) * 64 + d];
        h1[d] = std::max(acc, 0.0);
      }
      std::vector<double> h2(64, 0.0);
      for (int d = 0; d < 64; ++d) {
        double acc = cparams[3][d];
        for (int t = 0; t < 64; ++t) acc += h1[t] * cparams[2][t * 64 + d];
        h2[d] = std::max(acc, 0.0);
      }
      double cpred = cparams[5][0];
      for (int t = 0; t < 64; ++t) cpred += h2[t] * cparams[4][t];
      dsum[f] += (dpred - truth) * (dpred - truth);
      csum[f] += (cpred - truth) * (cpred - truth);
      counts[f] += 1;
    }
    for (int f = 0; f < kExtOps; ++f) {
      double d = dsum[f] / counts[f];
      double c = csum[f] / counts[f];
      if (train_split) {
        rep.discrete[f].first = d;
        rep.continuous[f].first = c;
      } else {
        rep.discrete[f].second = d;
        rep.continuous[f].second = c;
      }
    }
  };
  evaluate_split(0.5, 1.0, 401, true);
  evaluate_split(0.0, 0.5, 402, false);
  return rep;
}

std::string ExtendedOpsReport::summary() const {
  std::ostringstream out;
  out << "extended scalar operations, train/test MSE per target:\n";
  for (std::size_t f = 0; f < discrete.size(); ++f)
    out << "  f" << f << " discrete " << discrete[f].first << " / " << discrete[f].second
        << "  continuous " << continuous[f].first << " / " << continuous[f].second << "\n";
  return out.str();
}

std::vector<NoHintResult> no_hint_search(const std::vector<int>& train_sizes,
                                         const std::vector<int>& ks,
                                         const std::vector<double>& tau_ends, int seeds,
                                         std::uint64_t base_seed, int val_graphs) {
  std::vector<NoHintResult> results;
  for (int n : train_sizes)
    for (int k : ks)
      for (double te : tau_ends)
        for (int s = 0; s < seeds; ++s) {
          TrainConfig cfg;
          cfg.tasks = {TaskId::bfs};
          cfg.hints = false;
          cfg.nohint_k = k;
          cfg.fixed_n = n;
          cfg.er_p = 0.5;
          cfg.tau_end = te;
          cfg.seed = mix_seed(base_seed, n * 10000 + k * 100 + static_cast<int>(te * 10) + s);
          NoHintResult r;
          r.train_n = n;
          r.k = k;
          r.tau_end = te;
          r.seed = cfg.seed;
          r.trained = train_no_hint(cfg);
          EvalReport ev =
              evaluate(r.trained.params, TaskId::bfs, {16}, val_graphs, mix_seed(base_seed, 777));
          r.val_node = ev.sizes[0].node_level;
          r.val_graph = ev.sizes[0].graph_level;
          results.push_back(std::move(r));
        }
  std::sort(results.begin(), results.end(), [](const NoHintResult& a, const NoHintResult& b) {
    return a.val_node > b.val_node;
  });
  return results;
}

}  // namespace dgr
