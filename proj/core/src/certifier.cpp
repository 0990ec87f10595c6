#include "dgr/certifier.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dgr/reference.hpp"
#include "dgr/util.hpp"

namespace dgr {

namespace {

Graph finish_skeleton(Graph g, TaskId task, std::uint64_t seed, int start) {
  g = attach_task_scalars(std::move(g), task, seed);
  if (task_is_rooted(task)) g.start_node = start;
  if (task_uses_virtual_node(task)) g = add_virtual_node(std::move(g));
  return g;
}

Graph path_skeleton(int n) {
  Graph g;
  g.node_count = n;
  for (int i = 0; i < n; ++i) g.edges.push_back({i, i});
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.push_back({i, i + 1});
    g.edges.push_back({i + 1, i});
  }
  return g;
}

Graph star_skeleton(int n) {
  Graph g;
  g.node_count = n;
  for (int i = 0; i < n; ++i) g.edges.push_back({i, i});
  for (int i = 1; i < n; ++i) {
    g.edges.push_back({0, i});
    g.edges.push_back({i, 0});
  }
  return g;
}

// Diverse bounded corpus the reference spec is collected from. The machines
// are local pattern matchers, so the situation sets saturate at small sizes.
std::vector<Graph> spec_corpus(TaskId task) {
  std::vector<Graph> out;
  std::uint64_t base = 9000 + static_cast<int>(task);
  for (int n : {2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16, 20})
    for (int k = 0; k < 6; ++k)
      if (n >= 2) out.push_back(make_task_instance(task, n, mix_seed(base, n * 100 + k)));
  out.push_back(make_task_instance(task, 1, mix_seed(base, 1)));
  for (int n = 4; n <= 8; ++n) {
    Graph g = make_bipartite_k2(n, base);
    out.push_back(finish_skeleton(std::move(g), task, mix_seed(base, 200 + n), 0));
  }
  for (int n = 2; n <= 10; ++n)
    out.push_back(finish_skeleton(path_skeleton(n), task, mix_seed(base, 300 + n), 0));
  for (int n = 3; n <= 8; ++n) {
    out.push_back(finish_skeleton(star_skeleton(n), task, mix_seed(base, 400 + n), 0));
    out.push_back(finish_skeleton(star_skeleton(n), task, mix_seed(base, 450 + n), n - 1));
  }
  for (int n = 3; n <= 6; ++n)
    out.push_back(finish_skeleton(generate_er(n, 1.0, mix_seed(base, 500 + n)), task,
                                  mix_seed(base, 550 + n), n - 1));
  return out;
}

struct ContextKey {
  int receiver;
  std::vector<std::vector<TuplePat>> present;
  auto operator<=>(const ContextKey&) const = default;
};

struct SituationKey {
  int edge_state, sender_state, receiver_state;
  int recv_ctx, send_ctx;
  std::vector<TuplePat> own_tuple, rev_tuple;
  std::vector<char> own_first, rev_first;
  auto operator<=>(const SituationKey&) const = default;
};

}  // namespace

ReferenceTransitionSpec build_transition_spec(TaskId task) {
  const MachineSpec& m = machine_spec(task);
  const int H = m.head_count();
  ReferenceTransitionSpec spec;
  spec.task = task;
  std::map<ContextKey, int> ctx_index;
  std::map<SituationKey, int> sit_index;

  for (const Graph& g : spec_corpus(task)) {
    GraphView gv(g);
    HintTrajectory traj = run_reference(task, g);
    for (int t = 0; t <= traj.step_count(); ++t) {
      const StepState& s = traj.steps[t];
      StepChoices ch = reference_attention(m, gv, s);
      StepState truth =
          t < traj.step_count() ? traj.steps[t + 1] : machine_step(m, gv, s, ch);

      // attention contexts per node
      std::vector<int> node_ctx(g.node_count);
      for (int v = 0; v < g.node_count; ++v) {
        ContextKey key;
        key.receiver = s.node_state[v];
        key.present.resize(H);
        for (int h = 0; h < H; ++h) {
          std::set<TuplePat> tups;
          for (int e : gv.in_edges[v])
            tups.insert({s.node_state[g.edges[e].sender], s.edge_state[e],
                         static_cast<int>(ch.bits[h][e])});
          key.present[h].assign(tups.begin(), tups.end());
        }
        auto [it, inserted] = ctx_index.try_emplace(key, static_cast<int>(spec.contexts.size()));
        if (inserted) {
          AttnContext c;
          c.receiver = key.receiver;
          c.present = key.present;
          c.truth_next = truth.node_state[v];
          spec.contexts.push_back(std::move(c));
        } else if (spec.contexts[it->second].truth_next != truth.node_state[v]) {
          throw std::logic_error("transition spec: context with ambiguous next state in task " +
                                 std::string(task_name(task)));
        }
        node_ctx[v] = it->second;

        // node table entry under reference attention
        std::vector<int> nkey{s.node_state[v]};
        for (int h = 0; h < H; ++h)
          nkey.push_back(s.node_state[g.edges[ch.winner[h][v]].sender]);
        auto [nit, ninserted] = spec.node_entries.try_emplace(nkey, truth.node_state[v]);
        if (!ninserted && nit->second != truth.node_state[v])
          throw std::logic_error("transition spec: inconsistent node entry in task " +
                                 std::string(task_name(task)));
      }

      // edge situations
      for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edges[e];
        const int rev = gv.reverse_edge[e];
        SituationKey key;
        key.edge_state = s.edge_state[e];
        key.sender_state = s.node_state[ed.sender];
        key.receiver_state = s.node_state[ed.receiver];
        key.recv_ctx = node_ctx[ed.receiver];
        key.send_ctx = node_ctx[ed.sender];
        key.own_tuple.resize(H);
        key.rev_tuple.resize(H);
        key.own_first.resize(H);
        key.rev_first.resize(H);
        std::vector<int> fown(H), frev(H);
        for (int h = 0; h < H; ++h) {
          key.own_tuple[h] = {key.sender_state, key.edge_state,
                              static_cast<int>(ch.bits[h][e])};
          bool first = true;
          for (int o : gv.in_edges[ed.receiver]) {
            if (o == e) break;
            if (s.node_state[g.edges[o].sender] == key.sender_state &&
                s.edge_state[o] == key.edge_state && ch.bits[h][o] == ch.bits[h][e]) {
              first = false;
              break;
            }
          }
          key.own_first[h] = first ? 1 : 0;
          key.rev_tuple[h] = {key.receiver_state, s.edge_state[rev],
                              static_cast<int>(ch.bits[h][rev])};
          bool rfirst = true;
          for (int o : gv.in_edges[ed.sender]) {
            if (o == rev) break;
            if (s.node_state[g.edges[o].sender] == key.receiver_state &&
                s.edge_state[o] == s.edge_state[rev] && ch.bits[h][o] == ch.bits[h][rev]) {
              rfirst = false;
              break;
            }
          }
          key.rev_first[h] = rfirst ? 1 : 0;
          fown[h] = ch.winner[h][ed.receiver] == e ? 1 : 0;
          frev[h] = ch.winner[h][ed.sender] == rev ? 1 : 0;
        }
        auto [it, inserted] = sit_index.try_emplace(key, static_cast<int>(spec.edges.size()));
        if (inserted) {
          EdgeSituation es;
          es.edge_state = key.edge_state;
          es.sender_state = key.sender_state;
          es.receiver_state = key.receiver_state;
          es.truth_next = truth.edge_state[e];
          es.recv_ctx = key.recv_ctx;
          es.send_ctx = key.send_ctx;
          es.own_tuple = key.own_tuple;
          es.own_first = key.own_first;
          es.rev_tuple = key.rev_tuple;
          es.rev_first = key.rev_first;
          spec.edges.push_back(std::move(es));
        } else if (spec.edges[it->second].truth_next != truth.edge_state[e]) {
          throw std::logic_error("transition spec: edge situation with ambiguous next state in " +
                                 std::string(task_name(task)));
        }

        // edge table entry under reference attention
        std::vector<int> ekey{s.edge_state[e], s.node_state[ed.sender],
                              s.node_state[ed.receiver]};
        for (int h = 0; h < H; ++h) ekey.push_back(fown[h]);
        for (int h = 0; h < H; ++h) ekey.push_back(frev[h]);
        auto [eit, einserted] = spec.edge_entries.try_emplace(ekey, truth.edge_state[e]);
        if (!einserted && eit->second != truth.edge_state[e])
          throw std::logic_error("transition spec: inconsistent edge entry in task " +
                                 std::string(task_name(task)));
      }
    }
  }
  return spec;
}

void check_spec_realizable(const ReferenceTransitionSpec& spec) {
  const MachineSpec& m = machine_spec(spec.task);
  const int H = m.head_count();
  // A network sees endpoint states only through flagged value slots. Two
  // collected entries whose masked views coincide must agree.
  std::map<std::vector<int>, int> masked;
  for (const auto& [key, next] : spec.edge_entries) {
    bool any_own = false, any_rev = false;
    for (int h = 0; h < H; ++h) {
      any_own = any_own || key[3 + h] == 1;
      any_rev = any_rev || key[3 + H + h] == 1;
    }
    std::vector<int> mkey = key;
    if (!any_own) mkey[1] = -1;
    if (!any_rev) mkey[2] = -1;
    auto [it, inserted] = masked.try_emplace(mkey, next);
    if (!inserted && it->second != next)
      throw std::logic_error("spec not realizable: masked edge view is ambiguous in task " +
                             std::string(task_name(spec.task)));
  }
}

int TransitionCertificate::failed_count() const {
  int n = 0;
  for (const auto& a : assertions)
    if (!a.passed) ++n;
  return n;
}

std::string TransitionCertificate::report() const {
  std::ostringstream out;
  out << "certificate task=" << task_name(task) << " fingerprint=" << model_fingerprint << "\n";
  if (!reject_reason.empty()) {
    out << "REJECTED: " << reject_reason << "\n";
    return out.str();
  }
  for (const auto& a : assertions)
    out << a.kind << ' ' << a.detail << " margin=" << a.margin << ' '
        << (a.passed ? "PASS" : "FAIL") << "\n";
  out << "summary assertions=" << assertions.size() << " failed=" << failed_count() << " verdict="
      << (pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

TransitionCertificate check_assertions(const NetTables& nt,
                                       const ReferenceTransitionSpec& spec, double margin) {
  const MachineSpec& m = machine_spec(spec.task);
  const int Hs = m.head_count();
  const int Hm = nt.model_heads;
  TransitionCertificate cert;
  cert.task = spec.task;

  // model head -> spec head carrying the same binding
  std::vector<int> spec_head(Hm);
  for (int h = 0; h < Hm; ++h) spec_head[h] = h % Hs;

  auto tuple_name = [&](const TuplePat& t) {
    return "(" + m.node_states[t.sender] + "," + m.edge_states[t.edge] + "," +
           std::to_string(t.bit) + ")";
  };

  // winner tuple per (context, model head)
  std::vector<std::vector<TuplePat>> winner(spec.contexts.size(),
                                            std::vector<TuplePat>(Hm));
  for (std::size_t c = 0; c < spec.contexts.size(); ++c) {
    const AttnContext& ctx = spec.contexts[c];
    for (int h = 0; h < Hm; ++h) {
      const auto& present = ctx.present[spec_head[h]];
      double best = -1e300, second = -1e300;
      TuplePat bt{};
      for (const TuplePat& t : present) {
        double sc = nt.score(h, ctx.receiver, t.sender, t.edge, t.bit);
        if (sc > best) {
          second = best;
          best = sc;
          bt = t;
        } else if (sc > second) {
          second = sc;
        }
      }
      winner[c][h] = bt;
      AssertionOutcome a;
      a.kind = "attention";
      double mg = present.size() > 1 ? best - second : 1e9;
      a.margin = mg;
      a.passed = present.size() <= 1 || mg >= margin;
      a.detail = "ctx=" + std::to_string(c) + " head=" + std::to_string(h) +
                 " recv=" + m.node_states[ctx.receiver] + " win=" + tuple_name(bt);
      cert.assertions.push_back(std::move(a));
    }
    // induced node transition
    std::vector<int> winners(Hm);
    for (int h = 0; h < Hm; ++h) winners[h] = winner[c][h].sender;
    int got = nt.node_entry(ctx.receiver, winners);
    AssertionOutcome a;
    a.kind = "node";
    a.margin = 0.0;
    a.passed = got == ctx.truth_next;
    std::string ws;
    for (int h = 0; h < Hm; ++h) ws += (h ? "," : "") + m.node_states[winners[h]];
    a.detail = "ctx=" + std::to_string(c) + " cur=" + m.node_states[ctx.receiver] + " winners=[" +
               ws + "] expect=" + m.node_states[ctx.truth_next] + " got=" + m.node_states[got];
    cert.assertions.push_back(std::move(a));
  }

  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const EdgeSituation& es = spec.edges[i];
    int fown_mask = 0, frev_mask = 0;
    for (int h = 0; h < Hm; ++h) {
      int sh = spec_head[h];
      if (es.own_tuple[sh] == winner[es.recv_ctx][h] && es.own_first[sh]) fown_mask |= 1 << h;
      if (es.rev_tuple[sh] == winner[es.send_ctx][h] && es.rev_first[sh]) frev_mask |= 1 << h;
    }
    int got = nt.edge_entry(es.edge_state, es.sender_state, es.receiver_state, fown_mask,
                            frev_mask);
    AssertionOutcome a;
    a.kind = "edge";
    a.margin = 0.0;
    a.passed = got == es.truth_next;
    a.detail = "sit=" + std::to_string(i) + " e=" + m.edge_states[es.edge_state] + " su=" +
               m.node_states[es.sender_state] + " sv=" + m.node_states[es.receiver_state] +
               " fown=" + std::to_string(fown_mask) + " frev=" + std::to_string(frev_mask) +
               " expect=" + m.edge_states[es.truth_next] + " got=" + m.edge_states[got];
    cert.assertions.push_back(std::move(a));
  }

  for (int c = 0; c < m.channel_count(); ++c) {
    auto check_gates = [&](bool node_side, const std::vector<GateTriple>& forced,
                           const std::vector<std::vector<GateBits>>& got,
                           const std::vector<std::string>& names) {
      for (std::size_t st = 0; st < forced.size(); ++st) {
        const int want[3] = {forced[st].inc, forced[st].keep, forced[st].push};
        static const char* gate_names[3] = {"inc", "keep", "push"};
        for (int k = 0; k < 3; ++k) {
          if (want[k] == kAny) continue;
          AssertionOutcome a;
          a.kind = "gate";
          a.margin = std::abs(got[c][st].logit[k]);
          a.passed = got[c][st].bits[k] == want[k];
          a.detail = std::string(m.channels[c]) + (node_side ? " node " : " edge ") + names[st] +
                     " " + gate_names[k] + " expect=" + std::to_string(want[k]) +
                     " got=" + std::to_string(got[c][st].bits[k]);
          cert.assertions.push_back(std::move(a));
        }
      }
    };
    check_gates(true, m.node_gates[c], nt.node_gates, m.node_states);
    check_gates(false, m.edge_gates[c], nt.edge_gates, m.edge_states);
  }

  cert.pass = cert.failed_count() == 0;
  return cert;
}

TransitionCertificate certify(const ModelParams& mp, TaskId task) {
  TransitionCertificate cert;
  cert.task = task;
  for (const auto& b : mp.blocks)
    cert.model_fingerprint =
        crc32(b.v.data(), b.v.size() * sizeof(float), cert.model_fingerprint);
  if (!mp.covers(task)) {
    cert.reject_reason = "model does not cover task " + std::string(task_name(task));
    return cert;
  }
  if (!mp.hard_aggregation) {
    cert.reject_reason = "non-hard aggregation: table argument unsound";
    return cert;
  }
  static std::map<TaskId, ReferenceTransitionSpec> cache;
  static std::map<TaskId, bool> checked;
  auto it = cache.find(task);
  if (it == cache.end()) {
    it = cache.emplace(task, build_transition_spec(task)).first;
    check_spec_realizable(it->second);
  }
  NetTables nt = extract_tables(mp, task);
  auto out = check_assertions(nt, it->second, 1e-4);
  out.model_fingerprint = cert.model_fingerprint;
  return out;
}

}  // namespace dgr
