#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgr/util.hpp"

namespace dgr {

template <typename Real>
class TapeT;

// Handle to one tape node.
template <typename Real>
struct TensorRef {
  TapeT<Real>* tape = nullptr;
  int idx = -1;
  int rows() const { return tape->node(idx).rows; }
  int cols() const { return tape->node(idx).cols; }
  const std::vector<Real>& val() const { return tape->node(idx).val; }
  const std::vector<Real>& grad() const { return tape->node(idx).grad; }
};

// Minimal reverse-mode tape. Values are stored row-major; gradients
// accumulate additively; backward visits nodes in reverse creation order
// exactly once. Real = float for training, double for gradient checking.
template <typename Real>
class TapeT {
 public:
  struct Node {
    int rows = 0, cols = 1;  // cols==1 for vectors/scalars
    std::vector<Real> val;
    std::vector<Real> grad;
    bool needs_grad = false;
    std::function<void()> backward;  // empty for leaves
  };

  using T = TensorRef<Real>;

  Node& node(int i) { return nodes_[i]; }
  const Node& node(int i) const { return nodes_[i]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  T leaf(int rows, int cols, std::vector<Real> values, bool needs_grad) {
    if (static_cast<int>(values.size()) != rows * cols)
      throw std::invalid_argument("leaf: value count " + std::to_string(values.size()) +
                                  " does not match shape " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.val = std::move(values);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad.assign(n.val.size(), Real(0));
    nodes_.push_back(std::move(n));
    return {this, size() - 1};
  }

  T make(int rows, int cols, bool needs_grad, std::function<void()> backward) {
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.val.assign(static_cast<std::size_t>(rows) * cols, Real(0));
    n.needs_grad = needs_grad;
    if (needs_grad) {
      n.grad.assign(n.val.size(), Real(0));
      n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return {this, size() - 1};
  }

  // Seeds d(loss)=1 and propagates to every leaf. The forward values are
  // never mutated.
  void backward(T loss) {
    Node& l = node(loss.idx);
    if (l.val.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!l.needs_grad) throw std::invalid_argument("backward: loss does not require grad");
    l.grad[0] = Real(1);
    for (int i = loss.idx; i >= 0; --i)
      if (nodes_[i].needs_grad && nodes_[i].backward) nodes_[i].backward();
  }

 private:
  std::vector<Node> nodes_;
};

namespace ops {

template <typename Real>
using T = TensorRef<Real>;

void shape_mismatch(const std::string& op, int ar, int ac, int br, int bc);

template <typename Real>
T<Real> matmul(T<Real> a, T<Real> b);  // Eigen-backed, instantiated for float/double

template <typename Real>
T<Real> add(T<Real> a, T<Real> b) {
  auto* tp = a.tape;
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_mismatch("add", a.rows(), a.cols(), b.rows(), b.cols());
  bool ng = tp->node(a.idx).needs_grad || tp->node(b.idx).needs_grad;
  int ai = a.idx, bi = b.idx;
  auto out = tp->make(a.rows(), a.cols(), ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  const auto& bv = tp->node(bi).val;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (ng)
    tp->node(oi).backward = [tp, ai, bi, oi] {
      const auto& g = tp->node(oi).grad;
      if (tp->node(ai).needs_grad) {
        auto& ga = tp->node(ai).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (tp->node(bi).needs_grad) {
        auto& gb = tp->node(bi).grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  return out;
}

// out[r,c] = a[r,c] + bias[c]
template <typename Real>
T<Real> add_row_bias(T<Real> a, T<Real> bias) {
  auto* tp = a.tape;
  if (bias.rows() != a.cols() || bias.cols() != 1)
    shape_mismatch("add_row_bias", a.rows(), a.cols(), bias.rows(), bias.cols());
  bool ng = tp->node(a.idx).needs_grad || tp->node(bias.idx).needs_grad;
  int ai = a.idx, bi = bias.idx;
  int R = a.rows(), C = a.cols();
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  const auto& bv = tp->node(bi).val;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) ov[r * C + c] = av[r * C + c] + bv[c];
  if (ng)
    tp->node(oi).backward = [tp, ai, bi, oi, R, C] {
      const auto& g = tp->node(oi).grad;
      if (tp->node(ai).needs_grad) {
        auto& ga = tp->node(ai).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (tp->node(bi).needs_grad) {
        auto& gb = tp->node(bi).grad;
        for (int r = 0; r < R; ++r)
          for (int c = 0; c < C; ++c) gb[c] += g[r * C + c];
      }
    };
  return out;
}

template <typename Real>
T<Real> scale(T<Real> a, Real c) {
  auto* tp = a.tape;
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(a.rows(), a.cols(), ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, c] {
      const auto& g = tp->node(oi).grad;
      auto& ga = tp->node(ai).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    };
  return out;
}

template <typename Real>
T<Real> mul(T<Real> a, T<Real> b) {
  auto* tp = a.tape;
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_mismatch("mul", a.rows(), a.cols(), b.rows(), b.cols());
  bool ng = tp->node(a.idx).needs_grad || tp->node(b.idx).needs_grad;
  int ai = a.idx, bi = b.idx;
  auto out = tp->make(a.rows(), a.cols(), ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  const auto& bv = tp->node(bi).val;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (ng)
    tp->node(oi).backward = [tp, ai, bi, oi] {
      const auto& g = tp->node(oi).grad;
      const auto& av2 = tp->node(ai).val;
      const auto& bv2 = tp->node(bi).val;
      if (tp->node(ai).needs_grad) {
        auto& ga = tp->node(ai).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
      }
      if (tp->node(bi).needs_grad) {
        auto& gb = tp->node(bi).grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
      }
    };
  return out;
}

template <typename Real, typename F, typename DF>
T<Real> unary(T<Real> a, F f, DF df) {
  auto* tp = a.tape;
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(a.rows(), a.cols(), ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = f(av[i]);
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, df] {
      const auto& g = tp->node(oi).grad;
      const auto& av2 = tp->node(ai).val;
      const auto& ov2 = tp->node(oi).val;
      auto& ga = tp->node(ai).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(av2[i], ov2[i]);
    };
  return out;
}

template <typename Real>
T<Real> relu(T<Real> a) {
  return unary(
      a, [](Real x) { return x > Real(0) ? x : Real(0); },
      [](Real x, Real) { return x > Real(0) ? Real(1) : Real(0); });
}

template <typename Real>
T<Real> tanh_op(T<Real> a) {
  return unary(
      a, [](Real x) { return std::tanh(x); },
      [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
T<Real> sigmoid(T<Real> a) {
  return unary(
      a, [](Real x) { return Real(1) / (Real(1) + std::exp(-x)); },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
T<Real> reduce_sum(T<Real> a) {
  auto* tp = a.tape;
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(1, 1, ng, nullptr);
  int oi = out.idx;
  Real s = 0;
  for (Real v : tp->node(ai).val) s += v;
  tp->node(oi).val[0] = s;
  if (ng)
    tp->node(oi).backward = [tp, ai, oi] {
      Real g = tp->node(oi).grad[0];
      auto& ga = tp->node(ai).grad;
      for (auto& v : ga) v += g;
    };
  return out;
}

template <typename Real>
T<Real> reduce_mean(T<Real> a) {
  std::size_t n = a.val().size();
  return scale(reduce_sum(a), Real(1) / Real(n));
}

// Concatenates matrices with equal row counts along columns.
template <typename Real>
T<Real> concat_cols(std::vector<T<Real>> parts) {
  auto* tp = parts.at(0).tape;
  int R = parts[0].rows();
  int C = 0;
  bool ng = false;
  for (auto& p : parts) {
    if (p.rows() != R) shape_mismatch("concat_cols", R, parts[0].cols(), p.rows(), p.cols());
    C += p.cols();
    ng = ng || tp->node(p.idx).needs_grad;
  }
  std::vector<int> idxs, widths;
  for (auto& p : parts) {
    idxs.push_back(p.idx);
    widths.push_back(p.cols());
  }
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  int off = 0;
  for (std::size_t k = 0; k < idxs.size(); ++k) {
    const auto& pv = tp->node(idxs[k]).val;
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < widths[k]; ++c) ov[r * C + off + c] = pv[r * widths[k] + c];
    off += widths[k];
  }
  if (ng)
    tp->node(oi).backward = [tp, idxs, widths, oi, R, C] {
      const auto& g = tp->node(oi).grad;
      int off2 = 0;
      for (std::size_t k = 0; k < idxs.size(); ++k) {
        if (tp->node(idxs[k]).needs_grad) {
          auto& pg = tp->node(idxs[k]).grad;
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < widths[k]; ++c) pg[r * widths[k] + c] += g[r * C + off2 + c];
        }
        off2 += widths[k];
      }
    };
  return out;
}

template <typename Real>
T<Real> slice_cols(T<Real> a, int c0, int c1) {
  auto* tp = a.tape;
  if (c0 < 0 || c1 > a.cols() || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for width " + std::to_string(a.cols()));
  int R = a.rows(), C = a.cols(), W = c1 - c0;
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(R, W, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < W; ++c) ov[r * W + c] = av[r * C + c0 + c];
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, R, C, W, c0] {
      const auto& g = tp->node(oi).grad;
      auto& ga = tp->node(ai).grad;
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < W; ++c) ga[r * C + c0 + c] += g[r * W + c];
    };
  return out;
}

// Same data viewed under a different shape.
template <typename Real>
T<Real> reshape(T<Real> a, int rows, int cols) {
  auto* tp = a.tape;
  if (rows * cols != a.rows() * a.cols())
    shape_mismatch("reshape", a.rows(), a.cols(), rows, cols);
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(rows, cols, ng, nullptr);
  int oi = out.idx;
  tp->node(oi).val = tp->node(ai).val;
  if (ng)
    tp->node(oi).backward = [tp, ai, oi] {
      const auto& g = tp->node(oi).grad;
      auto& ga = tp->node(ai).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
  return out;
}

// out[r] = sum_c a[r,c]
template <typename Real>
T<Real> row_sum(T<Real> a) {
  auto* tp = a.tape;
  int R = a.rows(), C = a.cols();
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(R, 1, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  for (int r = 0; r < R; ++r) {
    Real s = 0;
    for (int c = 0; c < C; ++c) s += av[r * C + c];
    ov[r] = s;
  }
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, R, C] {
      const auto& g = tp->node(oi).grad;
      auto& ga = tp->node(ai).grad;
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) ga[r * C + c] += g[r];
    };
  return out;
}

// out[r,:] = s[r] * a[r,:]
template <typename Real>
T<Real> scale_rows(T<Real> a, T<Real> s) {
  auto* tp = a.tape;
  int R = a.rows(), C = a.cols();
  if (s.rows() != R || s.cols() != 1) shape_mismatch("scale_rows", R, C, s.rows(), s.cols());
  bool ng = tp->node(a.idx).needs_grad || tp->node(s.idx).needs_grad;
  int ai = a.idx, si = s.idx;
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  const auto& sv = tp->node(si).val;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) ov[r * C + c] = av[r * C + c] * sv[r];
  if (ng)
    tp->node(oi).backward = [tp, ai, si, oi, R, C] {
      const auto& g = tp->node(oi).grad;
      const auto& av2 = tp->node(ai).val;
      const auto& sv2 = tp->node(si).val;
      if (tp->node(ai).needs_grad) {
        auto& ga = tp->node(ai).grad;
        for (int r = 0; r < R; ++r)
          for (int c = 0; c < C; ++c) ga[r * C + c] += g[r * C + c] * sv2[r];
      }
      if (tp->node(si).needs_grad) {
        auto& gs = tp->node(si).grad;
        for (int r = 0; r < R; ++r) {
          Real acc = 0;
          for (int c = 0; c < C; ++c) acc += g[r * C + c] * av2[r * C + c];
          gs[r] += acc;
        }
      }
    };
  return out;
}

// out[i,:] = table[idx[i],:]; idx[i] == -1 yields a zero row.
template <typename Real>
T<Real> gather_rows(T<Real> table, const std::vector<int>& idx) {
  auto* tp = table.tape;
  int C = table.cols();
  int R = static_cast<int>(idx.size());
  bool ng = tp->node(table.idx).needs_grad;
  int ti = table.idx;
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& tv = tp->node(ti).val;
  for (int r = 0; r < R; ++r) {
    if (idx[r] < 0) continue;
    for (int c = 0; c < C; ++c) ov[r * C + c] = tv[idx[r] * C + c];
  }
  if (ng)
    tp->node(oi).backward = [tp, ti, oi, idx, R, C] {
      const auto& g = tp->node(oi).grad;
      auto& gt = tp->node(ti).grad;
      for (int r = 0; r < R; ++r) {
        if (idx[r] < 0) continue;
        for (int c = 0; c < C; ++c) gt[idx[r] * C + c] += g[r * C + c];
      }
    };
  return out;
}

// out[i,:] = s[i] * table[idx[i],:]; idx[i] == -1 yields a zero row.
template <typename Real>
T<Real> scaled_gather_rows(T<Real> table, const std::vector<int>& idx, T<Real> s) {
  auto* tp = table.tape;
  int C = table.cols();
  int R = static_cast<int>(idx.size());
  if (s.rows() != R || s.cols() != 1) shape_mismatch("scaled_gather_rows", R, 1, s.rows(), s.cols());
  bool ng = tp->node(table.idx).needs_grad || tp->node(s.idx).needs_grad;
  int ti = table.idx, si = s.idx;
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& tv = tp->node(ti).val;
  const auto& sv = tp->node(si).val;
  for (int r = 0; r < R; ++r) {
    if (idx[r] < 0) continue;
    for (int c = 0; c < C; ++c) ov[r * C + c] = sv[r] * tv[idx[r] * C + c];
  }
  if (ng)
    tp->node(oi).backward = [tp, ti, si, oi, idx, R, C] {
      const auto& g = tp->node(oi).grad;
      const auto& tv2 = tp->node(ti).val;
      const auto& sv2 = tp->node(si).val;
      for (int r = 0; r < R; ++r) {
        if (idx[r] < 0) continue;
        if (tp->node(ti).needs_grad) {
          auto& gt = tp->node(ti).grad;
          for (int c = 0; c < C; ++c) gt[idx[r] * C + c] += sv2[r] * g[r * C + c];
        }
        if (tp->node(si).needs_grad) {
          auto& gs = tp->node(si).grad;
          Real acc = 0;
          for (int c = 0; c < C; ++c) acc += tv2[idx[r] * C + c] * g[r * C + c];
          gs[r] += acc;
        }
      }
    };
  return out;
}

// Sums rows of a into segments: out[seg[i],:] += a[i,:].
template <typename Real>
T<Real> segment_sum(T<Real> a, const std::vector<int>& seg, int n_segments) {
  auto* tp = a.tape;
  int C = a.cols();
  int R = a.rows();
  if (static_cast<int>(seg.size()) != R)
    throw std::invalid_argument("segment_sum: segment list size mismatch");
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(n_segments, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& av = tp->node(ai).val;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) ov[seg[r] * C + c] += av[r * C + c];
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, seg, R, C] {
      const auto& g = tp->node(oi).grad;
      auto& ga = tp->node(ai).grad;
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) ga[r * C + c] += g[seg[r] * C + c];
    };
  return out;
}

// P[pair_row[i], pair_col[i]] += w[i]; used to fold per-edge attention
// weights into per-node state mixtures.
template <typename Real>
T<Real> pair_scatter(T<Real> w, const std::vector<int>& pair_row,
                     const std::vector<int>& pair_col, int R, int C) {
  auto* tp = w.tape;
  int E = w.rows();
  bool ng = tp->node(w.idx).needs_grad;
  int wi = w.idx;
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& wv = tp->node(wi).val;
  for (int e = 0; e < E; ++e) ov[pair_row[e] * C + pair_col[e]] += wv[e];
  if (ng)
    tp->node(oi).backward = [tp, wi, oi, pair_row, pair_col, E, C] {
      const auto& g = tp->node(oi).grad;
      auto& gw = tp->node(wi).grad;
      for (int e = 0; e < E; ++e) gw[e] += g[pair_row[e] * C + pair_col[e]];
    };
  return out;
}

// Per-segment softmax with temperature: weights sum to one within each
// segment; stabilized by the segment max.
template <typename Real>
T<Real> segment_softmax(T<Real> logits, const std::vector<int>& seg, int n_segments, Real tau) {
  if (!(tau > Real(0))) throw std::invalid_argument("segment_softmax: tau must be positive");
  auto* tp = logits.tape;
  int E = logits.rows();
  bool ng = tp->node(logits.idx).needs_grad;
  int li = logits.idx;
  auto out = tp->make(E, 1, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& lv = tp->node(li).val;
  std::vector<Real> mx(n_segments, -std::numeric_limits<Real>::infinity());
  std::vector<Real> denom(n_segments, Real(0));
  for (int e = 0; e < E; ++e) mx[seg[e]] = std::max(mx[seg[e]], lv[e]);
  for (int e = 0; e < E; ++e) {
    ov[e] = std::exp((lv[e] - mx[seg[e]]) / tau);
    denom[seg[e]] += ov[e];
  }
  for (int e = 0; e < E; ++e) ov[e] /= denom[seg[e]];
  if (ng)
    tp->node(oi).backward = [tp, li, oi, seg, E, n_segments, tau] {
      const auto& g = tp->node(oi).grad;
      const auto& w = tp->node(oi).val;
      auto& gl = tp->node(li).grad;
      std::vector<Real> dot(n_segments, Real(0));
      for (int e = 0; e < E; ++e) dot[seg[e]] += g[e] * w[e];
      for (int e = 0; e < E; ++e) gl[e] += w[e] * (g[e] - dot[seg[e]]) / tau;
    };
  return out;
}

// Row-wise mean cross-entropy against integer targets; backward is
// (softmax - onehot)/rows.
template <typename Real>
T<Real> ce_rows_mean(T<Real> logits, const std::vector<int>& targets) {
  auto* tp = logits.tape;
  int R = logits.rows(), C = logits.cols();
  if (static_cast<int>(targets.size()) != R)
    throw std::invalid_argument("ce_rows_mean: target count mismatch");
  bool ng = tp->node(logits.idx).needs_grad;
  int li = logits.idx;
  auto out = tp->make(1, 1, ng, nullptr);
  int oi = out.idx;
  const auto& lv = tp->node(li).val;
  Real total = 0;
  for (int r = 0; r < R; ++r) {
    Real mx = lv[r * C];
    for (int c = 1; c < C; ++c) mx = std::max(mx, lv[r * C + c]);
    Real lse = 0;
    for (int c = 0; c < C; ++c) lse += std::exp(lv[r * C + c] - mx);
    total += std::log(lse) + mx - lv[r * C + targets[r]];
  }
  tp->node(oi).val[0] = total / Real(R);
  if (ng)
    tp->node(oi).backward = [tp, li, oi, targets, R, C] {
      Real g = tp->node(oi).grad[0] / Real(R);
      const auto& lv2 = tp->node(li).val;
      auto& gl = tp->node(li).grad;
      for (int r = 0; r < R; ++r) {
        Real mx = lv2[r * C];
        for (int c = 1; c < C; ++c) mx = std::max(mx, lv2[r * C + c]);
        Real lse = 0;
        for (int c = 0; c < C; ++c) lse += std::exp(lv2[r * C + c] - mx);
        for (int c = 0; c < C; ++c) {
          Real p = std::exp(lv2[r * C + c] - mx) / lse;
          gl[r * C + c] += g * (p - (c == targets[r] ? Real(1) : Real(0)));
        }
      }
    };
  return out;
}

// Segmented cross-entropy: softmax within each segment, the target is one
// row per segment (used for pointer outputs over incident edges).
template <typename Real>
T<Real> ce_segments_mean(T<Real> logits, const std::vector<int>& seg, int n_segments,
                         const std::vector<int>& target_row) {
  auto* tp = logits.tape;
  int E = logits.rows();
  bool ng = tp->node(logits.idx).needs_grad;
  int li = logits.idx;
  auto out = tp->make(1, 1, ng, nullptr);
  int oi = out.idx;
  const auto& lv = tp->node(li).val;
  std::vector<Real> mx(n_segments, -std::numeric_limits<Real>::infinity());
  std::vector<Real> lse(n_segments, Real(0));
  for (int e = 0; e < E; ++e) mx[seg[e]] = std::max(mx[seg[e]], lv[e]);
  for (int e = 0; e < E; ++e) lse[seg[e]] += std::exp(lv[e] - mx[seg[e]]);
  Real total = 0;
  for (int s = 0; s < n_segments; ++s)
    total += std::log(lse[s]) + mx[s] - lv[target_row[s]];
  tp->node(oi).val[0] = total / Real(n_segments);
  if (ng)
    tp->node(oi).backward = [tp, li, oi, seg, n_segments, target_row, E] {
      Real g = tp->node(oi).grad[0] / Real(n_segments);
      const auto& lv2 = tp->node(li).val;
      auto& gl = tp->node(li).grad;
      std::vector<Real> mx2(n_segments, -std::numeric_limits<Real>::infinity());
      std::vector<Real> lse2(n_segments, Real(0));
      for (int e = 0; e < E; ++e) mx2[seg[e]] = std::max(mx2[seg[e]], lv2[e]);
      for (int e = 0; e < E; ++e) lse2[seg[e]] += std::exp(lv2[e] - mx2[seg[e]]);
      for (int e = 0; e < E; ++e)
        gl[e] += g * std::exp(lv2[e] - mx2[seg[e]]) / lse2[seg[e]];
      for (int s = 0; s < n_segments; ++s) gl[target_row[s]] -= g;
    };
  return out;
}

// Mean squared error against constant targets.
template <typename Real>
T<Real> mse_to_const(T<Real> a, const std::vector<Real>& target) {
  auto* tp = a.tape;
  if (a.val().size() != target.size())
    throw std::invalid_argument("mse_to_const: size mismatch");
  bool ng = tp->node(a.idx).needs_grad;
  int ai = a.idx;
  auto out = tp->make(1, 1, ng, nullptr);
  int oi = out.idx;
  const auto& av = tp->node(ai).val;
  Real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    Real d = av[i] - target[i];
    total += d * d;
  }
  std::size_t n = av.size();
  tp->node(oi).val[0] = total / Real(n);
  if (ng)
    tp->node(oi).backward = [tp, ai, oi, target, n] {
      Real g = tp->node(oi).grad[0];
      const auto& av2 = tp->node(ai).val;
      auto& ga = tp->node(ai).grad;
      for (std::size_t i = 0; i < n; ++i) ga[i] += g * Real(2) * (av2[i] - target[i]) / Real(n);
    };
  return out;
}

// Forward: one-hot of the row argmax (ties -> lowest index). Backward:
// the incoming gradient passes through to the logits unchanged.
template <typename Real>
T<Real> straight_through_onehot(T<Real> logits) {
  auto* tp = logits.tape;
  int R = logits.rows(), C = logits.cols();
  if (C < 1) throw std::invalid_argument("straight_through_onehot: empty last axis");
  bool ng = tp->node(logits.idx).needs_grad;
  int li = logits.idx;
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  const auto& lv = tp->node(li).val;
  for (int r = 0; r < R; ++r) {
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (lv[r * C + c] > lv[r * C + best]) best = c;
    ov[r * C + best] = Real(1);
  }
  if (ng)
    tp->node(oi).backward = [tp, li, oi] {
      const auto& g = tp->node(oi).grad;
      auto& gl = tp->node(li).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gl[i] += g[i];
    };
  return out;
}

// Gumbel-softmax sample per row: hard one-hot forward at the perturbed
// argmax, softmax((logits+G)/tau) jacobian on the way back.
template <typename Real>
T<Real> gumbel_softmax_sample(T<Real> logits, Real tau, Rng& rng) {
  if (!(tau > Real(0))) throw std::invalid_argument("gumbel_softmax_sample: tau must be positive");
  auto* tp = logits.tape;
  int R = logits.rows(), C = logits.cols();
  bool ng = tp->node(logits.idx).needs_grad;
  int li = logits.idx;
  std::uniform_real_distribution<double> unit(std::numeric_limits<double>::min(), 1.0);
  auto soft = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(R) * C);
  const auto& lv = tp->node(li).val;
  std::vector<Real> z(static_cast<std::size_t>(R) * C);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double gnoise = -std::log(-std::log(unit(rng)));
    z[i] = (lv[i] + Real(gnoise)) / tau;
  }
  auto out = tp->make(R, C, ng, nullptr);
  int oi = out.idx;
  auto& ov = tp->node(oi).val;
  for (int r = 0; r < R; ++r) {
    Real mx = z[r * C];
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (z[r * C + c] > mx) {
        mx = z[r * C + c];
        best = c;
      }
    Real denom = 0;
    for (int c = 0; c < C; ++c) denom += std::exp(z[r * C + c] - mx);
    for (int c = 0; c < C; ++c) (*soft)[r * C + c] = std::exp(z[r * C + c] - mx) / denom;
    ov[r * C + best] = Real(1);
  }
  if (ng)
    tp->node(oi).backward = [tp, li, oi, soft, R, C, tau] {
      const auto& g = tp->node(oi).grad;
      auto& gl = tp->node(li).grad;
      for (int r = 0; r < R; ++r) {
        Real dot = 0;
        for (int c = 0; c < C; ++c) dot += g[r * C + c] * (*soft)[r * C + c];
        for (int c = 0; c < C; ++c)
          gl[r * C + c] += (*soft)[r * C + c] * (g[r * C + c] - dot) / tau;
      }
    };
  return out;
}

}  // namespace ops

// Adam optimizer state for one named parameter set.
struct AdamState {
  std::vector<std::vector<float>> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// One Adam update with bias correction. Throws on non-finite gradients,
// naming the offending parameter.
void adam_step(std::vector<std::vector<float>>& params,
               const std::vector<std::vector<float>>& grads,
               const std::vector<std::string>& names, AdamState& state, double lr);

// Max relative error between an analytic gradient and central differences,
// |analytic - fd| / (|analytic| + 1e-8), evaluated in double precision.
double finite_difference_check(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x,
                               const std::vector<double>& analytic, double eps);

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

}  // namespace dgr
