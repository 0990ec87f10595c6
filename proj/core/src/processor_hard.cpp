#include <algorithm>
#include <cmath>

#include "dgr/processor.hpp"

namespace dgr {

namespace {

// Double-precision direct evaluation of the trained blocks with per-state
// projections cached.
struct DirectEval {
  const ModelParams& mp;
  TaskId task;
  int kn, ke, H, hh, hid;
  std::vector<ScalarChannel> bindings;
  // [head][state*hh + d]
  std::vector<std::vector<double>> q, k, kej, v;
  std::vector<std::vector<double>> ind;       // [head][hh]
  std::vector<std::vector<double>> vw1m;      // [head][kn*hid]  V -> node FFN
  std::vector<std::vector<double>> vw1a, vw1b;  // [head][kn*hid] V -> edge FFN slots
  std::vector<double> embw1x;  // [kn*hid]
  std::vector<double> embw1e;  // [ke*hid]
  std::vector<double> nb1, nw2, nb2, eb1, ew2, eb2;
  std::vector<double> now, nob, eow, eob;

  static std::vector<double> to_d(const ParamBlock& b) {
    return std::vector<double>(b.v.begin(), b.v.end());
  }

  // rows(a) x cols(b) product of row-major blocks
  static std::vector<double> mm(const std::vector<double>& a, int ar, int ac,
                                const std::vector<double>& b, int bc) {
    std::vector<double> out(static_cast<std::size_t>(ar) * bc, 0.0);
    for (int i = 0; i < ar; ++i)
      for (int t = 0; t < ac; ++t) {
        double x = a[i * ac + t];
        if (x == 0.0) continue;
        for (int j = 0; j < bc; ++j) out[i * bc + j] += x * b[t * bc + j];
      }
    return out;
  }

  DirectEval(const ModelParams& params, TaskId t) : mp(params), task(t) {
    const MachineSpec& m = machine_spec(task);
    auto [kn_, ke_] = model_vocab_sizes(mp, task);
    kn = kn_;
    ke = ke_;
    H = mp.head_count;
    hh = mp.head_dim();
    hid = mp.hidden;
    bindings = head_bindings(m, H);
    const std::string tp = task_prefix(task);
    auto nemb = to_d(mp.at(tp + "node_emb"));
    auto eemb = to_d(mp.at(tp + "edge_emb"));
    q.resize(H);
    k.resize(H);
    kej.resize(H);
    v.resize(H);
    ind.resize(H);
    vw1m.resize(H);
    vw1a.resize(H);
    vw1b.resize(H);
    for (int h = 0; h < H; ++h) {
      const std::string p = "proc/head" + std::to_string(h) + "/";
      q[h] = mm(nemb, kn, hid, to_d(mp.at(p + "wq")), hh);
      k[h] = mm(nemb, kn, hid, to_d(mp.at(p + "wk")), hh);
      kej[h] = mm(eemb, ke, hid, to_d(mp.at(p + "wke")), hh);
      v[h] = mm(nemb, kn, hid, to_d(mp.at(p + "wv")), hh);
      ind[h] = to_d(mp.at(p + "ind"));
      vw1m[h] = mm(v[h], kn, hh, to_d(mp.at("proc/ffn_n/w1m" + std::to_string(h))), hid);
      vw1a[h] = mm(v[h], kn, hh, to_d(mp.at("proc/ffn_e/w1a" + std::to_string(h))), hid);
      vw1b[h] = mm(v[h], kn, hh, to_d(mp.at("proc/ffn_e/w1b" + std::to_string(h))), hid);
    }
    embw1x = mm(nemb, kn, hid, to_d(mp.at("proc/ffn_n/w1x")), hid);
    embw1e = mm(eemb, ke, hid, to_d(mp.at("proc/ffn_e/w1e")), hid);
    nb1 = to_d(mp.at("proc/ffn_n/b1"));
    nw2 = to_d(mp.at("proc/ffn_n/w2"));
    nb2 = to_d(mp.at("proc/ffn_n/b2"));
    eb1 = to_d(mp.at("proc/ffn_e/b1"));
    ew2 = to_d(mp.at("proc/ffn_e/w2"));
    eb2 = to_d(mp.at("proc/ffn_e/b2"));
    now = to_d(mp.at(tp + "node_out_w"));
    nob = to_d(mp.at(tp + "node_out_b"));
    eow = to_d(mp.at(tp + "edge_out_w"));
    eob = to_d(mp.at(tp + "edge_out_b"));
  }

  double score(int h, int qs, int ss, int es, int bit) const {
    double acc = 0.0;
    for (int d = 0; d < hh; ++d) {
      double key = k[h][ss * hh + d] + kej[h][es * hh + d] + (bit ? ind[h][d] : 0.0);
      acc += q[h][qs * hh + d] * key;
    }
    return acc / std::sqrt(static_cast<double>(hh));
  }

  // mix[h] is a length-kn mixture over sender states (one-hot at inference).
  std::vector<double> node_logits(int cur, const std::vector<std::vector<double>>& mix) const {
    std::vector<double> hidv(nb1);
    for (int d = 0; d < hid; ++d) hidv[d] += embw1x[cur * hid + d];
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < kn; ++s) {
        double w = mix[h][s];
        if (w == 0.0) continue;
        for (int d = 0; d < hid; ++d) hidv[d] += w * vw1m[h][s * hid + d];
      }
    for (auto& x : hidv) x = std::max(x, 0.0);
    std::vector<double> out(nb2);
    for (int t = 0; t < hid; ++t) {
      if (hidv[t] == 0.0) continue;
      for (int d = 0; d < hid; ++d) out[d] += hidv[t] * nw2[t * hid + d];
    }
    std::vector<double> logits(nob);
    for (int t = 0; t < hid; ++t)
      for (int c = 0; c < kn; ++c) logits[c] += out[t] * now[t * kn + c];
    return logits;
  }

  std::vector<double> edge_logits(int es, const std::vector<std::vector<double>>& mix_a,
                                  const std::vector<std::vector<double>>& mix_b) const {
    std::vector<double> hidv(eb1);
    for (int d = 0; d < hid; ++d) hidv[d] += embw1e[es * hid + d];
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < kn; ++s) {
        double wa = mix_a[h][s];
        if (wa != 0.0)
          for (int d = 0; d < hid; ++d) hidv[d] += wa * vw1a[h][s * hid + d];
        double wb = mix_b[h][s];
        if (wb != 0.0)
          for (int d = 0; d < hid; ++d) hidv[d] += wb * vw1b[h][s * hid + d];
      }
    }
    for (auto& x : hidv) x = std::max(x, 0.0);
    std::vector<double> out(eb2);
    for (int t = 0; t < hid; ++t) {
      if (hidv[t] == 0.0) continue;
      for (int d = 0; d < hid; ++d) out[d] += hidv[t] * ew2[t * hid + d];
    }
    std::vector<double> logits(eob);
    for (int t = 0; t < hid; ++t)
      for (int c = 0; c < ke; ++c) logits[c] += out[t] * eow[t * ke + c];
    return logits;
  }

  double gate_logit(const std::string& channel, bool node_side, const char* gate,
                    int state) const {
    const std::string tp = task_prefix(task);
    const std::string base =
        tp + "gate/" + channel + "/" + (node_side ? "node" : "edge") + "/" + gate + "/";
    const auto& w = mp.at(base + "w");
    const auto& b = mp.at(base + "b");
    const auto& emb = mp.at(tp + (node_side ? "node_emb" : "edge_emb"));
    double acc = b.v[0];
    for (int d = 0; d < hid; ++d) acc += static_cast<double>(emb.v[state * hid + d]) * w.v[d];
    return acc;
  }
};

int argmax_lowest(const std::vector<double>& xs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(xs.size()); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

std::vector<std::vector<std::uint8_t>> binding_bits(const NetTables& nt, const GraphView& gv,
                                                    const StepState& s) {
  const MachineSpec& m = machine_spec(nt.task);
  std::vector<std::vector<std::uint8_t>> bits(nt.model_heads);
  for (int h = 0; h < nt.model_heads; ++h) {
    const ScalarChannel& b = nt.bindings[h];
    bits[h] = select_best_bits(gv, s, m.channel_id(b.name), b.attachment, b.direction);
  }
  return bits;
}

}  // namespace

int NetTables::node_entry(int cur, const std::vector<int>& winners) const {
  int idx = cur;
  for (int h = 0; h < model_heads; ++h) idx = idx * k_nodes + winners[h];
  return node_next[idx];
}

int NetTables::edge_entry(int e, int su, int sv, int fown_mask, int frev_mask) const {
  int idx = (e * k_nodes + su) * k_nodes + sv;
  idx = (idx << (2 * model_heads)) | fown_mask | (frev_mask << model_heads);
  return edge_next[idx];
}

NetTables extract_tables(const ModelParams& mp, TaskId task) {
  DirectEval de(mp, task);
  const MachineSpec& m = machine_spec(task);
  NetTables nt;
  nt.task = task;
  nt.k_nodes = de.kn;
  nt.k_edges = de.ke;
  nt.model_heads = de.H;
  nt.bindings = de.bindings;
  nt.channels = m.channels;

  nt.scores.resize(de.H);
  for (int h = 0; h < de.H; ++h) {
    nt.scores[h].resize(static_cast<std::size_t>(de.kn) * de.kn * de.ke * 2);
    for (int qs = 0; qs < de.kn; ++qs)
      for (int ss = 0; ss < de.kn; ++ss)
        for (int es = 0; es < de.ke; ++es)
          for (int b = 0; b < 2; ++b)
            nt.scores[h][((qs * de.kn + ss) * de.ke + es) * 2 + b] = de.score(h, qs, ss, es, b);
  }

  int node_keys = de.kn;
  for (int h = 0; h < de.H; ++h) node_keys *= de.kn;
  nt.node_next.resize(node_keys);
  std::vector<std::vector<double>> mix(de.H, std::vector<double>(de.kn, 0.0));
  std::vector<int> w(de.H, 0);
  for (int key = 0; key < node_keys; ++key) {
    int rest = key;
    for (int h = de.H - 1; h >= 0; --h) {
      w[h] = rest % de.kn;
      rest /= de.kn;
    }
    int cur = rest;
    for (int h = 0; h < de.H; ++h) {
      std::fill(mix[h].begin(), mix[h].end(), 0.0);
      mix[h][w[h]] = 1.0;
    }
    nt.node_next[key] = argmax_lowest(de.node_logits(cur, mix));
  }

  const int flag_space = 1 << (2 * de.H);
  nt.edge_next.resize(static_cast<std::size_t>(de.ke) * de.kn * de.kn * flag_space);
  std::vector<std::vector<double>> ma(de.H, std::vector<double>(de.kn, 0.0));
  std::vector<std::vector<double>> mb(de.H, std::vector<double>(de.kn, 0.0));
  for (int e = 0; e < de.ke; ++e)
    for (int su = 0; su < de.kn; ++su)
      for (int sv = 0; sv < de.kn; ++sv)
        for (int f = 0; f < flag_space; ++f) {
          for (int h = 0; h < de.H; ++h) {
            std::fill(ma[h].begin(), ma[h].end(), 0.0);
            std::fill(mb[h].begin(), mb[h].end(), 0.0);
            if (f & (1 << h)) ma[h][su] = 1.0;
            if (f & (1 << (de.H + h))) mb[h][sv] = 1.0;
          }
          int idx = (((e * de.kn + su) * de.kn + sv) << (2 * de.H)) | f;
          nt.edge_next[idx] = argmax_lowest(de.edge_logits(e, ma, mb));
        }

  nt.node_gates.resize(m.channel_count());
  nt.edge_gates.resize(m.channel_count());
  static const char* gate_names[3] = {"inc", "keep", "push"};
  for (int c = 0; c < m.channel_count(); ++c) {
    nt.node_gates[c].resize(de.kn);
    nt.edge_gates[c].resize(de.ke);
    for (int st = 0; st < de.kn; ++st)
      for (int gix = 0; gix < 3; ++gix) {
        double l = de.gate_logit(m.channels[c], true, gate_names[gix], st);
        nt.node_gates[c][st].logit[gix] = l;
        nt.node_gates[c][st].bits[gix] = l > 0.0 ? 1 : 0;
      }
    for (int st = 0; st < de.ke; ++st)
      for (int gix = 0; gix < 3; ++gix) {
        double l = de.gate_logit(m.channels[c], false, gate_names[gix], st);
        nt.edge_gates[c][st].logit[gix] = l;
        nt.edge_gates[c][st].bits[gix] = l > 0.0 ? 1 : 0;
      }
  }
  return nt;
}

std::vector<std::vector<double>> direct_edge_logits(const ModelParams& mp, TaskId task,
                                                    const GraphView& gv, const StepState& s) {
  DirectEval de(mp, task);
  const Graph& g = *gv.g;
  std::vector<std::vector<double>> out(de.H, std::vector<double>(g.edge_count(), 0.0));
  for (int h = 0; h < de.H; ++h) {
    const ScalarChannel& b = de.bindings[h];
    auto bits = select_best_bits(gv, s, machine_spec(task).channel_id(b.name), b.attachment,
                                 b.direction);
    for (int e = 0; e < g.edge_count(); ++e)
      out[h][e] = de.score(h, s.node_state[g.edges[e].receiver],
                           s.node_state[g.edges[e].sender], s.edge_state[e], bits[e]);
  }
  return out;
}

StepState hard_step(const NetTables& nt, const GraphView& gv, const StepState& s) {
  const Graph& g = *gv.g;
  const MachineSpec& m = machine_spec(nt.task);
  const int H = nt.model_heads;
  auto bits = binding_bits(nt, gv, s);

  // hard attention: per head, per receiver, the strictly best-scored edge
  // (ties resolved toward the lowest edge index)
  std::vector<std::vector<int>> winner(H, std::vector<int>(g.node_count, -1));
  for (int h = 0; h < H; ++h)
    for (int v = 0; v < g.node_count; ++v) {
      double best = -1e300;
      int pick = -1;
      for (int e : gv.in_edges[v]) {
        double sc = nt.score(h, s.node_state[v], s.node_state[g.edges[e].sender],
                             s.edge_state[e], bits[h][e]);
        if (sc > best) {
          best = sc;
          pick = e;
        }
      }
      winner[h][v] = pick;
    }

  StepState next = s;
  std::vector<int> winners(H);
  for (int v = 0; v < g.node_count; ++v) {
    for (int h = 0; h < H; ++h) winners[h] = s.node_state[g.edges[winner[h][v]].sender];
    next.node_state[v] = nt.node_entry(s.node_state[v], winners);
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edges[e];
    const int rev = gv.reverse_edge[e];
    int fown = 0, frev = 0;
    for (int h = 0; h < H; ++h) {
      if (winner[h][ed.receiver] == e) fown |= 1 << h;
      if (rev >= 0 && winner[h][ed.sender] == rev) frev |= 1 << h;
    }
    next.edge_state[e] =
        nt.edge_entry(s.edge_state[e], s.node_state[ed.sender], s.node_state[ed.receiver],
                      fown, frev);
  }

  for (int c = 0; c < m.channel_count(); ++c) {
    const auto& ng = nt.node_gates[c];
    const auto& eg = nt.edge_gates[c];
    for (int v = 0; v < g.node_count; ++v) {
      const auto& gt = ng[s.node_state[v]];
      double acc = gt.bits[0] + gt.bits[1] * s.node_values[c][v];
      for (int e : gv.in_edges[v])
        acc += eg[s.edge_state[e]].bits[2] * s.edge_values[c][e];
      next.node_values[c][v] = acc;
    }
    for (int e = 0; e < g.edge_count(); ++e) {
      const auto& gt = eg[s.edge_state[e]];
      next.edge_values[c][e] = gt.bits[0] + gt.bits[1] * s.edge_values[c][e] +
                               ng[s.node_state[g.edges[e].sender]].bits[2] *
                                   s.node_values[c][g.edges[e].sender];
    }
  }
  return next;
}

std::vector<StepState> hard_rollout(const NetTables& nt, const Graph& g, int steps) {
  GraphView gv(g);
  std::vector<StepState> out;
  out.push_back(encode_inputs(g, nt.task));
  for (int t = 0; t < steps; ++t) out.push_back(hard_step(nt, gv, out.back()));
  return out;
}

SoftInferResult soft_infer_rollout(const ModelParams& mp, TaskId task, const Graph& g,
                                   int steps, double tau, int probe_edge) {
  DirectEval de(mp, task);
  const MachineSpec& m = machine_spec(task);
  GraphView gv(g);
  NetTables nt = extract_tables(mp, task);  // gate bits stay hard
  SoftInferResult res;
  res.steps.push_back(encode_inputs(g, task));
  for (int t = 0; t < steps; ++t) {
    const StepState& s = res.steps.back();
    std::vector<std::vector<double>> weights(de.H, std::vector<double>(g.edge_count(), 0.0));
    for (int h = 0; h < de.H; ++h) {
      const ScalarChannel& b = de.bindings[h];
      auto bits = select_best_bits(gv, s, m.channel_id(b.name), b.attachment, b.direction);
      for (int v = 0; v < g.node_count; ++v) {
        double mx = -1e300;
        for (int e : gv.in_edges[v])
          mx = std::max(mx, de.score(h, s.node_state[v], s.node_state[g.edges[e].sender],
                                     s.edge_state[e], bits[e]));
        double denom = 0.0;
        for (int e : gv.in_edges[v]) {
          double sc = de.score(h, s.node_state[v], s.node_state[g.edges[e].sender],
                               s.edge_state[e], bits[e]);
          weights[h][e] = std::exp((sc - mx) / tau);
          denom += weights[h][e];
        }
        for (int e : gv.in_edges[v]) weights[h][e] /= denom;
      }
    }
    if (probe_edge >= 0) {
      std::vector<double> pw(de.H);
      for (int h = 0; h < de.H; ++h) pw[h] = weights[h][probe_edge];
      res.probe_weight.push_back(pw);
    }

    StepState next = s;
    std::vector<std::vector<double>> mix(de.H, std::vector<double>(de.kn, 0.0));
    for (int v = 0; v < g.node_count; ++v) {
      for (int h = 0; h < de.H; ++h) {
        std::fill(mix[h].begin(), mix[h].end(), 0.0);
        for (int e : gv.in_edges[v]) mix[h][s.node_state[g.edges[e].sender]] += weights[h][e];
      }
      next.node_state[v] = argmax_lowest(de.node_logits(s.node_state[v], mix));
    }
    std::vector<std::vector<double>> ma(de.H, std::vector<double>(de.kn, 0.0));
    std::vector<std::vector<double>> mb(de.H, std::vector<double>(de.kn, 0.0));
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge& ed = g.edges[e];
      const int rev = gv.reverse_edge[e];
      for (int h = 0; h < de.H; ++h) {
        std::fill(ma[h].begin(), ma[h].end(), 0.0);
        std::fill(mb[h].begin(), mb[h].end(), 0.0);
        ma[h][s.node_state[ed.sender]] = weights[h][e];
        if (rev >= 0) mb[h][s.node_state[ed.receiver]] = weights[h][rev];
      }
      next.edge_state[e] = argmax_lowest(de.edge_logits(s.edge_state[e], ma, mb));
    }
    // scalar gates stay hard; this ablation only relaxes the aggregation
    for (int c = 0; c < m.channel_count(); ++c) {
      const auto& ng = nt.node_gates[c];
      const auto& eg = nt.edge_gates[c];
      for (int v = 0; v < g.node_count; ++v) {
        const auto& gt = ng[s.node_state[v]];
        double acc = gt.bits[0] + gt.bits[1] * s.node_values[c][v];
        for (int e : gv.in_edges[v]) acc += eg[s.edge_state[e]].bits[2] * s.edge_values[c][e];
        next.node_values[c][v] = acc;
      }
      for (int e = 0; e < g.edge_count(); ++e) {
        const auto& gt = eg[s.edge_state[e]];
        next.edge_values[c][e] = gt.bits[0] + gt.bits[1] * s.edge_values[c][e] +
                                 ng[s.node_state[g.edges[e].sender]].bits[2] *
                                     s.node_values[c][g.edges[e].sender];
      }
    }
    res.steps.push_back(std::move(next));
  }
  return res;
}

}  // namespace dgr
