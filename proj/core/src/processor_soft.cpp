#include <cmath>

#include "dgr/processor.hpp"

namespace dgr {

template <typename Real>
ParamLeavesT<Real> lift_params(TapeT<Real>& tape, const ModelParams& mp, bool needs_grad) {
  ParamLeavesT<Real> out;
  for (const auto& b : mp.blocks) {
    std::vector<Real> vals(b.v.begin(), b.v.end());
    out.leaves.emplace(b.name, tape.leaf(b.rows, b.cols, std::move(vals), needs_grad));
  }
  return out;
}

template <typename Real>
void harvest_grads(const TapeT<Real>& tape, const ParamLeavesT<Real>& leaves,
                   const ModelParams& mp, std::vector<std::vector<float>>& grads) {
  grads.resize(mp.blocks.size());
  for (std::size_t i = 0; i < mp.blocks.size(); ++i) {
    const auto& g = leaves.at(mp.blocks[i].name).grad();
    if (grads[i].empty()) grads[i].assign(g.size(), 0.0f);
    for (std::size_t j = 0; j < g.size(); ++j) grads[i][j] += static_cast<float>(g[j]);
  }
}

namespace {

// Per-graph tensors hoisted out of the step loop: parameter projections that
// do not depend on the step.
template <typename Real>
struct GraphComputed {
  using TT = TensorRef<Real>;
  std::vector<TT> q, k, kej, v, ind_row;      // per head
  std::vector<TT> vw1m, vw1a, vw1b;           // per head, k_n x h
  TT embw1x, embw1e;
  TT nb1, nw2, nb2, eb1, ew2, eb2, now, nob, eow, eob;
  // gates[channel][side 0=node,1=edge][gate 0..2] -> per-state values
  std::vector<std::array<std::array<TT, 3>, 2>> gates;
};

template <typename Real>
GraphComputed<Real> hoist(TapeT<Real>& tape, const ParamLeavesT<Real>& lv,
                          const ModelParams& mp, TaskId task, Real tau) {
  using namespace ops;
  const MachineSpec& m = machine_spec(task);
  const std::string tp = task_prefix(task);
  GraphComputed<Real> gc;
  auto nemb = lv.at(tp + "node_emb");
  auto eemb = lv.at(tp + "edge_emb");
  const int H = mp.head_count;
  for (int h = 0; h < H; ++h) {
    const std::string p = "proc/head" + std::to_string(h) + "/";
    gc.q.push_back(matmul(nemb, lv.at(p + "wq")));
    gc.k.push_back(matmul(nemb, lv.at(p + "wk")));
    gc.kej.push_back(matmul(eemb, lv.at(p + "wke")));
    gc.v.push_back(matmul(nemb, lv.at(p + "wv")));
    gc.ind_row.push_back(reshape(lv.at(p + "ind"), 1, mp.head_dim()));
    gc.vw1m.push_back(matmul(gc.v[h], lv.at("proc/ffn_n/w1m" + std::to_string(h))));
    gc.vw1a.push_back(matmul(gc.v[h], lv.at("proc/ffn_e/w1a" + std::to_string(h))));
    gc.vw1b.push_back(matmul(gc.v[h], lv.at("proc/ffn_e/w1b" + std::to_string(h))));
  }
  gc.embw1x = matmul(nemb, lv.at("proc/ffn_n/w1x"));
  gc.embw1e = matmul(eemb, lv.at("proc/ffn_e/w1e"));
  gc.nb1 = lv.at("proc/ffn_n/b1");
  gc.nw2 = lv.at("proc/ffn_n/w2");
  gc.nb2 = lv.at("proc/ffn_n/b2");
  gc.eb1 = lv.at("proc/ffn_e/b1");
  gc.ew2 = lv.at("proc/ffn_e/w2");
  gc.eb2 = lv.at("proc/ffn_e/b2");
  gc.now = lv.at(tp + "node_out_w");
  gc.nob = lv.at(tp + "node_out_b");
  gc.eow = lv.at(tp + "edge_out_w");
  gc.eob = lv.at(tp + "edge_out_b");
  static const char* gate_names[3] = {"inc", "keep", "push"};
  gc.gates.resize(m.channel_count());
  for (int c = 0; c < m.channel_count(); ++c)
    for (int side = 0; side < 2; ++side)
      for (int gix = 0; gix < 3; ++gix) {
        const std::string base = tp + "gate/" + m.channels[c] + "/" +
                                 (side == 0 ? "node" : "edge") + "/" + gate_names[gix] + "/";
        auto logits = add_row_bias(matmul(side == 0 ? nemb : eemb, lv.at(base + "w")),
                                   lv.at(base + "b"));
        gc.gates[c][side][gix] = sigmoid(scale(logits, Real(1) / tau));
      }
  (void)tape;
  return gc;
}

// Static per-graph index vectors.
struct EdgeIndex {
  std::vector<int> send, recv, rev, zeros;
  explicit EdgeIndex(const GraphView& gv) {
    const Graph& g = *gv.g;
    for (int e = 0; e < g.edge_count(); ++e) {
      send.push_back(g.edges[e].sender);
      recv.push_back(g.edges[e].receiver);
      rev.push_back(gv.reverse_edge[e]);
      zeros.push_back(0);
    }
  }
};

template <typename Real>
std::vector<TensorRef<Real>> attention_weights(TapeT<Real>& tape, const GraphComputed<Real>& gc,
                                               const ModelParams& mp, const MachineSpec& m,
                                               const GraphView& gv, const EdgeIndex& ei,
                                               const StepState& s, Real tau) {
  using namespace ops;
  const int H = mp.head_count;
  const int E = gv.g->edge_count();
  auto bindings = head_bindings(m, H);
  std::vector<int> send_state(E), recv_state(E), edge_state(E);
  for (int e = 0; e < E; ++e) {
    send_state[e] = s.node_state[ei.send[e]];
    recv_state[e] = s.node_state[ei.recv[e]];
    edge_state[e] = s.edge_state[e];
  }
  std::vector<TensorRef<Real>> weights;
  for (int h = 0; h < H; ++h) {
    auto bits = select_best_bits(gv, s, m.channel_id(bindings[h].name), bindings[h].attachment,
                                 bindings[h].direction);
    std::vector<Real> bits_f(E);
    for (int e = 0; e < E; ++e) bits_f[e] = static_cast<Real>(bits[e]);
    auto bits_leaf = tape.leaf(E, 1, std::move(bits_f), false);
    auto q_rows = gather_rows(gc.q[h], recv_state);
    auto k_rows = add(add(gather_rows(gc.k[h], send_state), gather_rows(gc.kej[h], edge_state)),
                      scaled_gather_rows(gc.ind_row[h], ei.zeros, bits_leaf));
    auto logits = scale(row_sum(mul(q_rows, k_rows)),
                        Real(1) / std::sqrt(static_cast<Real>(mp.head_dim())));
    weights.push_back(segment_softmax(logits, ei.recv, gv.g->node_count, tau));
  }
  return weights;
}

}  // namespace

template <typename Real>
HintLossParts<Real> build_hint_loss(TapeT<Real>& tape, const ParamLeavesT<Real>& lv,
                                    const ModelParams& mp, const GraphView& gv,
                                    const HintTrajectory& traj, Real tau, Real tau_attn) {
  using namespace ops;
  const MachineSpec& m = machine_spec(traj.task);
  const Graph& g = *gv.g;
  const int H = mp.head_count;
  const int n = g.node_count;
  const int E = g.edge_count();
  const int T = traj.step_count();
  GraphComputed<Real> gc = hoist(tape, lv, mp, traj.task, tau);
  EdgeIndex ei(gv);

  TensorRef<Real> node_ce{}, edge_ce{}, mse{};
  TensorRef<Real> last_edge_logits{};
  for (int t = 0; t < T; ++t) {
    const StepState& s = traj.steps[t];
    const StepState& target = traj.steps[t + 1];
    std::vector<int> send_state(E), edge_state(E);
    for (int e = 0; e < E; ++e) {
      send_state[e] = s.node_state[ei.send[e]];
      edge_state[e] = s.edge_state[e];
    }
    auto weights = attention_weights(tape, gc, mp, m, gv, ei, s, tau_attn);

    // node path
    TensorRef<Real> pre = gather_rows(gc.embw1x, s.node_state);
    for (int h = 0; h < H; ++h) {
      auto p = pair_scatter(weights[h], ei.recv, send_state, n, m.node_state_count());
      pre = add(pre, matmul(p, gc.vw1m[h]));
    }
    auto hidden = relu(add_row_bias(pre, gc.nb1));
    auto out = add_row_bias(matmul(hidden, gc.nw2), gc.nb2);
    auto node_logits = add_row_bias(matmul(out, gc.now), gc.nob);
    auto nce = ce_rows_mean(node_logits, target.node_state);
    node_ce = t == 0 ? nce : add(node_ce, nce);

    // edge path
    TensorRef<Real> epre = gather_rows(gc.embw1e, edge_state);
    for (int h = 0; h < H; ++h) {
      auto slot_a = scaled_gather_rows(gc.vw1a[h], send_state, weights[h]);
      auto w_rev = gather_rows(weights[h], ei.rev);
      std::vector<int> recv_state(E);
      for (int e = 0; e < E; ++e) recv_state[e] = s.node_state[ei.recv[e]];
      auto slot_b = scaled_gather_rows(gc.vw1b[h], recv_state, w_rev);
      epre = add(epre, add(slot_a, slot_b));
    }
    auto ehidden = relu(add_row_bias(epre, gc.eb1));
    auto eout = add_row_bias(matmul(ehidden, gc.ew2), gc.eb2);
    auto edge_logits = add_row_bias(matmul(eout, gc.eow), gc.eob);
    auto ece = ce_rows_mean(edge_logits, target.edge_state);
    edge_ce = t == 0 ? ece : add(edge_ce, ece);
    if (t == T - 1) last_edge_logits = edge_logits;

    // scalar updates per channel
    for (int c = 0; c < m.channel_count(); ++c) {
      std::vector<Real> nv(s.node_values[c].begin(), s.node_values[c].end());
      std::vector<Real> ev(s.edge_values[c].begin(), s.edge_values[c].end());
      auto nv_leaf = tape.leaf(n, 1, std::move(nv), false);
      auto ev_leaf = tape.leaf(E, 1, std::move(ev), false);
      auto inc_n = gather_rows(gc.gates[c][0][0], s.node_state);
      auto keep_n = gather_rows(gc.gates[c][0][1], s.node_state);
      auto push_n = gather_rows(gc.gates[c][0][2], send_state);
      auto inc_e = gather_rows(gc.gates[c][1][0], edge_state);
      auto keep_e = gather_rows(gc.gates[c][1][1], edge_state);
      auto push_e = gather_rows(gc.gates[c][1][2], edge_state);
      auto pulled = segment_sum(mul(push_e, ev_leaf), ei.recv, n);
      auto next_n = add(add(inc_n, mul(keep_n, nv_leaf)), pulled);
      std::vector<Real> sender_vals(E);
      for (int e = 0; e < E; ++e)
        sender_vals[e] = static_cast<Real>(s.node_values[c][ei.send[e]]);
      auto next_e = add(add(inc_e, mul(keep_e, ev_leaf)),
                        mul(push_n, tape.leaf(E, 1, std::move(sender_vals), false)));
      std::vector<Real> tgt_n(target.node_values[c].begin(), target.node_values[c].end());
      std::vector<Real> tgt_e(target.edge_values[c].begin(), target.edge_values[c].end());
      auto m1 = mse_to_const(next_n, tgt_n);
      auto m2 = mse_to_const(next_e, tgt_e);
      auto both = add(m1, m2);
      mse = (t == 0 && c == 0) ? both : add(mse, both);
    }
  }

  HintLossParts<Real> parts;
  parts.node_ce = scale(node_ce, Real(1) / Real(T));
  parts.edge_ce = scale(edge_ce, Real(1) / Real(T));
  parts.scalar_mse = scale(mse, Real(1) / Real(T * m.channel_count() * 2));
  parts.parent_ce = TensorRef<Real>{};
  parts.total = add(add(parts.node_ce, parts.edge_ce), parts.scalar_mse);

  const bool tree_task = traj.task == TaskId::bfs || traj.task == TaskId::dfs ||
                         traj.task == TaskId::sp || traj.task == TaskId::prim;
  if (tree_task) {
    const int tree = m.edge_state_id("tree");
    const int n_real = real_node_count(g);
    const StepState& final = traj.steps[T];
    std::vector<int> subset, seg;
    std::vector<int> target_row(n_real, -1);
    for (int e = 0; e < E; ++e) {
      int r = ei.recv[e];
      if (r >= n_real) continue;
      if (final.edge_state[e] == tree) target_row[r] = static_cast<int>(subset.size());
      seg.push_back(r);
      subset.push_back(e);
    }
    for (int v = 0; v < n_real; ++v)
      if (target_row[v] < 0) throw std::logic_error("hint loss: node without a tree pointer");
    auto tree_logits = gather_rows(slice_cols(last_edge_logits, tree, tree + 1), subset);
    parts.parent_ce = ce_segments_mean(tree_logits, seg, n_real, target_row);
    parts.total = add(parts.total, parts.parent_ce);
  }
  return parts;
}

template <typename Real>
TensorRef<Real> build_no_hint_loss(TapeT<Real>& tape, const ParamLeavesT<Real>& lv,
                                   const ModelParams& mp, const GraphView& gv, TaskId task,
                                   int steps, Real tau, Rng& rng) {
  using namespace ops;
  const MachineSpec& m = machine_spec(task);
  const Graph& g = *gv.g;
  const std::string tp = task_prefix(task);
  auto [kn, ke] = model_vocab_sizes(mp, task);
  const int n = g.node_count;
  const int E = g.edge_count();
  const int H = mp.head_count;
  EdgeIndex ei(gv);
  auto bindings = head_bindings(m, H);
  auto loops = g.self_loop_index();

  // latent initial encoding: the start node and its self-loop carry state 1
  std::vector<Real> x0(static_cast<std::size_t>(n) * kn, Real(0));
  for (int v = 0; v < n; ++v) x0[v * kn] = Real(1);
  std::vector<Real> e0(static_cast<std::size_t>(E) * ke, Real(0));
  for (int e = 0; e < E; ++e) e0[e * ke] = Real(1);
  if (task_is_rooted(task)) {
    int st = *g.start_node;
    x0[st * kn] = Real(0);
    x0[st * kn + 1] = Real(1);
    e0[loops[st] * ke] = Real(0);
    e0[loops[st] * ke + 1] = Real(1);
  }
  auto X = tape.leaf(n, kn, std::move(x0), false);
  auto Eg = tape.leaf(E, ke, std::move(e0), false);

  // frozen input scalars give the select-best priorities
  StepState scal = encode_inputs(g, task);

  auto nemb = lv.at(tp + "node_emb");
  auto eemb = lv.at(tp + "edge_emb");
  TensorRef<Real> edge_logits{};
  for (int t = 0; t < steps; ++t) {
    auto feats = matmul(X, nemb);
    auto efeats = matmul(Eg, eemb);
    // hard view of the current latent states for the indicator bits
    StepState hard = scal;
    hard.node_state.assign(n, 0);
    hard.edge_state.assign(E, 0);
    for (int v = 0; v < n; ++v) {
      int best = 0;
      for (int c = 1; c < kn; ++c)
        if (X.val()[v * kn + c] > X.val()[v * kn + best]) best = c;
      hard.node_state[v] = best;
    }
    for (int e = 0; e < E; ++e) {
      int best = 0;
      for (int c = 1; c < ke; ++c)
        if (Eg.val()[e * ke + c] > Eg.val()[e * ke + best]) best = c;
      hard.edge_state[e] = best;
    }

    TensorRef<Real> pre{}, epre{};
    for (int h = 0; h < H; ++h) {
      auto Q = matmul(feats, lv.at("proc/head" + std::to_string(h) + "/wq"));
      auto K = matmul(feats, lv.at("proc/head" + std::to_string(h) + "/wk"));
      auto KE = matmul(efeats, lv.at("proc/head" + std::to_string(h) + "/wke"));
      auto V = matmul(feats, lv.at("proc/head" + std::to_string(h) + "/wv"));
      auto bits = select_best_bits(gv, hard, m.channel_id(bindings[h].name),
                                   bindings[h].attachment, bindings[h].direction);
      std::vector<Real> bits_f(E);
      for (int e = 0; e < E; ++e) bits_f[e] = static_cast<Real>(bits[e]);
      auto ind_row = reshape(lv.at("proc/head" + std::to_string(h) + "/ind"), 1, mp.head_dim());
      auto k_rows = add(add(gather_rows(K, ei.send), KE),
                        scaled_gather_rows(ind_row, ei.zeros, tape.leaf(E, 1, bits_f, false)));
      auto logits = scale(row_sum(mul(gather_rows(Q, ei.recv), k_rows)),
                          Real(1) / std::sqrt(static_cast<Real>(mp.head_dim())));
      auto w = segment_softmax(logits, ei.recv, n, tau);
      auto Mh = segment_sum(scale_rows(gather_rows(V, ei.send), w), ei.recv, n);
      auto mterm = matmul(Mh, lv.at("proc/ffn_n/w1m" + std::to_string(h)));
      pre = h == 0 ? mterm : add(pre, mterm);
      auto va = matmul(V, lv.at("proc/ffn_e/w1a" + std::to_string(h)));
      auto vb = matmul(V, lv.at("proc/ffn_e/w1b" + std::to_string(h)));
      auto slot_a = scale_rows(gather_rows(va, ei.send), w);
      auto slot_b = scale_rows(gather_rows(vb, ei.recv), gather_rows(w, ei.rev));
      auto eterm = add(slot_a, slot_b);
      epre = h == 0 ? eterm : add(epre, eterm);
    }
    pre = add(pre, matmul(feats, lv.at("proc/ffn_n/w1x")));
    auto hidden = relu(add_row_bias(pre, lv.at("proc/ffn_n/b1")));
    auto out = add_row_bias(matmul(hidden, lv.at("proc/ffn_n/w2")), lv.at("proc/ffn_n/b2"));
    auto node_logits = add_row_bias(matmul(out, lv.at(tp + "node_out_w")), lv.at(tp + "node_out_b"));
    epre = add(epre, matmul(efeats, lv.at("proc/ffn_e/w1e")));
    auto ehidden = relu(add_row_bias(epre, lv.at("proc/ffn_e/b1")));
    auto eout = add_row_bias(matmul(ehidden, lv.at("proc/ffn_e/w2")), lv.at("proc/ffn_e/b2"));
    edge_logits = add_row_bias(matmul(eout, lv.at(tp + "edge_out_w")), lv.at(tp + "edge_out_b"));

    X = gumbel_softmax_sample(node_logits, tau, rng);
    Eg = gumbel_softmax_sample(edge_logits, tau, rng);
  }

  // pointer loss over incident-edge "pointer state" logits at the last step
  HintTrajectory ref = run_reference(task, g);
  const int n_real = real_node_count(g);
  std::vector<int> subset, seg, target_row(n_real, -1);
  for (int e = 0; e < E; ++e) {
    int r = ei.recv[e];
    if (r >= n_real) continue;
    int p = ref.outputs.parents[r];
    if (ei.send[e] == p) target_row[r] = static_cast<int>(subset.size());
    seg.push_back(r);
    subset.push_back(e);
  }
  auto ptr_logits = gather_rows(slice_cols(edge_logits, 1, 2), subset);
  return ce_segments_mean(ptr_logits, seg, n_real, target_row);
}

template ParamLeavesT<float> lift_params(TapeT<float>&, const ModelParams&, bool);
template ParamLeavesT<double> lift_params(TapeT<double>&, const ModelParams&, bool);
template void harvest_grads(const TapeT<float>&, const ParamLeavesT<float>&, const ModelParams&,
                            std::vector<std::vector<float>>&);
template void harvest_grads(const TapeT<double>&, const ParamLeavesT<double>&,
                            const ModelParams&, std::vector<std::vector<float>>&);
template HintLossParts<float> build_hint_loss(TapeT<float>&, const ParamLeavesT<float>&,
                                              const ModelParams&, const GraphView&,
                                              const HintTrajectory&, float, float);
template HintLossParts<double> build_hint_loss(TapeT<double>&, const ParamLeavesT<double>&,
                                               const ModelParams&, const GraphView&,
                                               const HintTrajectory&, double, double);
template TensorRef<float> build_no_hint_loss(TapeT<float>&, const ParamLeavesT<float>&,
                                             const ModelParams&, const GraphView&, TaskId, int,
                                             float, Rng&);
template TensorRef<double> build_no_hint_loss(TapeT<double>&, const ParamLeavesT<double>&,
                                              const ModelParams&, const GraphView&, TaskId, int,
                                              double, Rng&);

}  // namespace dgr
