#include "dgr/model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "dgr/certifier.hpp"
#include "dgr/util.hpp"

namespace dgr {

ParamBlock& ModelParams::at(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument("unknown parameter block: " + name);
  return blocks[it->second];
}
const ParamBlock& ModelParams::at(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument("unknown parameter block: " + name);
  return blocks[it->second];
}
ParamBlock& ModelParams::add(const std::string& name, int rows, int cols) {
  if (index.count(name)) throw std::invalid_argument("duplicate parameter block: " + name);
  ParamBlock b;
  b.name = name;
  b.rows = rows;
  b.cols = cols;
  b.v.assign(static_cast<std::size_t>(rows) * cols, 0.0f);
  index[name] = static_cast<int>(blocks.size());
  blocks.push_back(std::move(b));
  return blocks.back();
}
bool ModelParams::covers(TaskId t) const {
  for (TaskId x : tasks)
    if (x == t) return true;
  return false;
}

std::vector<ScalarChannel> head_bindings(const MachineSpec& spec, int model_heads) {
  std::vector<ScalarChannel> out(model_heads);
  for (int h = 0; h < model_heads; ++h) out[h] = spec.heads[h % spec.head_count()];
  return out;
}

std::pair<int, int> model_vocab_sizes(const ModelParams& mp, TaskId task) {
  const auto& ne = mp.at(task_prefix(task) + "node_emb");
  const auto& ee = mp.at(task_prefix(task) + "edge_emb");
  return {ne.rows, ee.rows};
}

namespace {

void add_task_blocks(ModelParams& mp, TaskId task, int k_nodes, int k_edges,
                     const std::vector<std::string>& channels) {
  const std::string tp = task_prefix(task);
  const int h = mp.hidden;
  mp.add(tp + "node_emb", k_nodes, h);
  mp.add(tp + "edge_emb", k_edges, h);
  mp.add(tp + "node_out_w", h, k_nodes);
  mp.add(tp + "node_out_b", k_nodes, 1);
  mp.add(tp + "edge_out_w", h, k_edges);
  mp.add(tp + "edge_out_b", k_edges, 1);
  for (const std::string& c : channels)
    for (const char* side : {"node", "edge"})
      for (const char* gate : {"inc", "keep", "push"}) {
        mp.add(tp + "gate/" + c + "/" + side + "/" + gate + "/w", h, 1);
        mp.add(tp + "gate/" + c + "/" + side + "/" + gate + "/b", 1, 1);
      }
}

void add_shared_blocks(ModelParams& mp) {
  const int h = mp.hidden;
  const int hh = mp.head_dim();
  for (int head = 0; head < mp.head_count; ++head) {
    const std::string p = "proc/head" + std::to_string(head) + "/";
    mp.add(p + "wq", h, hh);
    mp.add(p + "wk", h, hh);
    mp.add(p + "wke", h, hh);
    mp.add(p + "wv", h, hh);
    mp.add(p + "ind", hh, 1);
  }
  mp.add("proc/ffn_n/w1x", h, h);
  for (int head = 0; head < mp.head_count; ++head)
    mp.add("proc/ffn_n/w1m" + std::to_string(head), hh, h);
  mp.add("proc/ffn_n/b1", h, 1);
  mp.add("proc/ffn_n/w2", h, h);
  mp.add("proc/ffn_n/b2", h, 1);
  mp.add("proc/ffn_e/w1e", h, h);
  for (int head = 0; head < mp.head_count; ++head) {
    mp.add("proc/ffn_e/w1a" + std::to_string(head), hh, h);
    mp.add("proc/ffn_e/w1b" + std::to_string(head), hh, h);
  }
  mp.add("proc/ffn_e/b1", h, 1);
  mp.add("proc/ffn_e/w2", h, h);
  mp.add("proc/ffn_e/b2", h, 1);
}

}  // namespace

ModelParams init_model(const std::vector<TaskId>& tasks, int hidden, int head_count,
                       std::uint64_t seed, int nohint_k) {
  if (tasks.empty()) throw std::invalid_argument("init_model: no tasks");
  if (nohint_k == 1)
    throw std::invalid_argument("init_model: one latent state cannot represent any progress");
  ModelParams mp;
  mp.hidden = hidden;
  mp.tasks = tasks;
  int need = 1;
  for (TaskId t : tasks) need = std::max(need, machine_spec(t).head_count());
  mp.head_count = head_count > 0 ? head_count : need;
  if (hidden % mp.head_count != 0)
    throw std::invalid_argument("init_model: hidden size must divide by head count");
  add_shared_blocks(mp);
  for (TaskId t : tasks) {
    const MachineSpec& m = machine_spec(t);
    int kn = m.node_state_count(), ke = m.edge_state_count();
    if (nohint_k > 0) {
      if (tasks.size() != 1)
        throw std::invalid_argument("init_model: latent vocabulary is single-task only");
      kn = nohint_k;
      ke = 2;
    }
    add_task_blocks(mp, t, kn, ke, m.channels);
  }
  Rng rng = make_rng(seed, 101);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (auto& b : mp.blocks) {
    bool is_bias = b.name.ends_with("/b") || b.name.ends_with("b1") || b.name.ends_with("b2") ||
                   b.name.ends_with("_b");
    if (is_bias) continue;  // biases start at zero
    float scale = b.name.find("emb") != std::string::npos || b.name.ends_with("ind")
                      ? 1.0f
                      : 1.0f / std::sqrt(static_cast<float>(b.rows));
    for (auto& x : b.v) x = normal(rng) * scale;
  }
  return mp;
}

namespace {

// Additive attention fit: per receiver and head, find A[sender]+B[edge]
// levels (plus a unit indicator bonus) under which the reference winner of
// every reachable context strictly dominates the co-present competitors.
// Attention logits are necessarily additive in (sender state, edge state)
// per receiver, so feasibility over the reachable contexts is exactly what a
// trained model needs too. Perceptron updates; throws when infeasible.
struct AdditiveScores {
  std::vector<double> a, b;  // per sender state / edge state
};

AdditiveScores fit_additive(const MachineSpec& m, const ReferenceTransitionSpec& rts,
                            int receiver, int head) {
  const auto& classes = m.rankings[receiver][head];
  const int kn = m.node_state_count(), ke = m.edge_state_count();
  struct Pair {
    TuplePat w, l;
  };
  std::vector<Pair> pairs;
  for (const AttnContext& ctx : rts.contexts) {
    if (ctx.receiver != receiver) continue;
    const auto& present = ctx.present[head];
    // first ranked class with a matching present tuple wins
    int win_class = -1;
    for (std::size_t ci = 0; ci < classes.size() && win_class < 0; ++ci)
      for (const TuplePat& t : present)
        for (const TuplePat& pat : classes[ci].tuples)
          if (pat.matches(t.sender, t.edge, t.bit)) {
            win_class = static_cast<int>(ci);
            break;
          }
    if (win_class < 0)
      throw std::logic_error("golden_model: context without a ranked winner for " +
                             m.node_states[receiver] + " in " + task_name(m.task));
    auto in_class = [&](const TuplePat& t) {
      for (const TuplePat& pat : classes[win_class].tuples)
        if (pat.matches(t.sender, t.edge, t.bit)) return true;
      return false;
    };
    for (const TuplePat& w : present) {
      if (!in_class(w)) continue;
      for (const TuplePat& l : present)
        if (!in_class(l)) pairs.push_back({w, l});
    }
  }
  AdditiveScores s;
  s.a.assign(kn, 0.0);
  s.b.assign(ke, 0.0);
  const double bonus = 1.0, margin = 1.0;
  auto score = [&](const TuplePat& t) { return s.a[t.sender] + s.b[t.edge] + bonus * t.bit; };
  for (int iter = 0; iter < 500000; ++iter) {
    bool violated = false;
    for (const Pair& p : pairs) {
      if (score(p.w) < score(p.l) + margin) {
        violated = true;
        s.a[p.w.sender] += 1.0;
        s.b[p.w.edge] += 1.0;
        s.a[p.l.sender] -= 1.0;
        s.b[p.l.edge] -= 1.0;
      }
    }
    if (!violated) return s;
  }
  throw std::logic_error("golden_model: attention ranking not additively realizable for " +
                         m.node_states[receiver] + " head " + std::to_string(head) + " in " +
                         task_name(m.task));
}

}  // namespace

ModelParams golden_model(TaskId task, int hidden) {
  const MachineSpec& m = machine_spec(task);
  const int kn = m.node_state_count(), ke = m.edge_state_count();
  const int H = m.head_count();
  ModelParams mp;
  mp.hidden = hidden;
  mp.head_count = H;
  mp.tasks = {task};
  const int hh = mp.head_dim();
  if (hh < kn || hidden < kn || hidden < ke)
    throw std::invalid_argument("golden_model: hidden size too small for the vocabulary");
  add_shared_blocks(mp);
  add_task_blocks(mp, task, kn, ke, m.channels);
  const std::string tp = task_prefix(task);

  auto& nemb = mp.at(tp + "node_emb");
  for (int s = 0; s < kn; ++s) nemb.v[s * hidden + s] = 1.0f;
  auto& eemb = mp.at(tp + "edge_emb");
  for (int e = 0; e < ke; ++e) eemb.v[e * hidden + e] = 1.0f;

  ReferenceTransitionSpec rts = build_transition_spec(task);
  check_spec_realizable(rts);

  const float root_hh = std::sqrt(static_cast<float>(hh));
  for (int head = 0; head < H; ++head) {
    const std::string p = "proc/head" + std::to_string(head) + "/";
    auto& wq = mp.at(p + "wq");
    auto& wk = mp.at(p + "wk");
    auto& wke = mp.at(p + "wke");
    auto& wv = mp.at(p + "wv");
    auto& ind = mp.at(p + "ind");
    for (int q = 0; q < kn; ++q) {
      wq.v[q * hh + q] = root_hh;
      AdditiveScores sc = fit_additive(m, rts, q, head);
      for (int s = 0; s < kn; ++s) wk.v[s * hh + q] = static_cast<float>(sc.a[s]);
      for (int e = 0; e < ke; ++e) wke.v[e * hh + q] = static_cast<float>(sc.b[e]);
      ind.v[q] = 1.0f;
    }
    for (int s = 0; s < kn; ++s) wv.v[s * hh + s] = 1.0f;
  }

  // node transition units
  {
    auto& w1x = mp.at("proc/ffn_n/w1x");
    auto& b1 = mp.at("proc/ffn_n/b1");
    auto& w2 = mp.at("proc/ffn_n/w2");
    auto& outw = mp.at(tp + "node_out_w");
    if (static_cast<int>(rts.node_entries.size()) > hidden)
      throw std::invalid_argument("golden_model: " + std::to_string(rts.node_entries.size()) +
                                  " node entries exceed hidden width");
    int j = 0;
    for (const auto& [key, next] : rts.node_entries) {
      w1x.v[key[0] * hidden + j] = 1.0f;
      for (int head = 0; head < H; ++head) {
        auto& w1m = mp.at("proc/ffn_n/w1m" + std::to_string(head));
        w1m.v[key[1 + head] * hidden + j] = 1.0f;
      }
      b1.v[j] = -static_cast<float>(H);
      outw.v[j * kn + next] = 4.0f;
      ++j;
    }
    for (int d = 0; d < hidden; ++d) w2.v[d * hidden + d] = 1.0f;
  }

  // edge transition units over distinct masked situations
  {
    std::map<std::vector<int>, int> masked;
    for (const auto& [key, next] : rts.edge_entries) {
      bool any_own = false, any_rev = false;
      for (int h = 0; h < H; ++h) {
        any_own = any_own || key[3 + h] == 1;
        any_rev = any_rev || key[3 + H + h] == 1;
      }
      std::vector<int> mk = key;
      if (!any_own) mk[1] = -1;
      if (!any_rev) mk[2] = -1;
      masked.try_emplace(mk, next);
    }
    if (static_cast<int>(masked.size()) > hidden)
      throw std::invalid_argument("golden_model: " + std::to_string(masked.size()) +
                                  " edge entries exceed hidden width");
    auto& w1e = mp.at("proc/ffn_e/w1e");
    auto& b1 = mp.at("proc/ffn_e/b1");
    auto& w2 = mp.at("proc/ffn_e/w2");
    auto& outw = mp.at(tp + "edge_out_w");
    int j = 0;
    for (const auto& [key, next] : masked) {
      const int e = key[0], su = key[1], sv = key[2];
      int positives = 1;
      w1e.v[e * hidden + j] = 1.0f;
      for (int h = 0; h < H; ++h) {
        auto& w1a = mp.at("proc/ffn_e/w1a" + std::to_string(h));
        auto& w1b = mp.at("proc/ffn_e/w1b" + std::to_string(h));
        if (key[3 + h] == 1) {
          w1a.v[su * hidden + j] = 1.0f;
          ++positives;
        } else {
          for (int s = 0; s < kn; ++s) w1a.v[s * hidden + j] -= 4.0f;
        }
        if (key[3 + H + h] == 1) {
          w1b.v[sv * hidden + j] = 1.0f;
          ++positives;
        } else {
          for (int s = 0; s < kn; ++s) w1b.v[s * hidden + j] -= 4.0f;
        }
      }
      b1.v[j] = -static_cast<float>(positives - 1);
      outw.v[j * ke + next] = 4.0f;
      ++j;
    }
    for (int d = 0; d < hidden; ++d) w2.v[d * hidden + d] = 1.0f;
    // attention choices inside interchangeable preference classes may differ
    // from the reference pick; those flag patterns all keep plain edges
    // plain, so plain is the resting output
    mp.at(tp + "edge_out_b").v[0] = 2.0f;
  }

  // gates at their forced bits; unconstrained bits sit at zero
  for (int c = 0; c < m.channel_count(); ++c) {
    auto set_gates = [&](const char* side, const std::vector<GateTriple>& gates, int count) {
      static const char* names[3] = {"inc", "keep", "push"};
      for (int k = 0; k < 3; ++k) {
        auto& w = mp.at(tp + "gate/" + m.channels[c] + "/" + side + "/" + names[k] + "/w");
        for (int st = 0; st < count; ++st) {
          int bit = k == 0 ? gates[st].inc : k == 1 ? gates[st].keep : gates[st].push;
          w.v[st] = bit == 1 ? 8.0f : -8.0f;
        }
      }
    };
    set_gates("node", m.node_gates[c], kn);
    set_gates("edge", m.edge_gates[c], ke);
  }
  return mp;
}

}  // namespace dgr
