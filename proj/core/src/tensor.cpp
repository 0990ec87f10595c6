#include "dgr/tensor.hpp"

#include <Eigen/Dense>

namespace dgr {

namespace ops {

void shape_mismatch(const std::string& op, int ar, int ac, int br, int bc) {
  throw std::invalid_argument(op + ": incompatible shapes " + std::to_string(ar) + "x" +
                              std::to_string(ac) + " and " + std::to_string(br) + "x" +
                              std::to_string(bc));
}

template <typename Real>
using EMat = Eigen::Map<
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename Real>
using CEMat = Eigen::Map<
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename Real>
T<Real> matmul(T<Real> a, T<Real> b) {
  auto* tp = a.tape;
  if (a.cols() != b.rows()) shape_mismatch("matmul", a.rows(), a.cols(), b.rows(), b.cols());
  int M = a.rows(), K = a.cols(), N = b.cols();
  bool ng = tp->node(a.idx).needs_grad || tp->node(b.idx).needs_grad;
  int ai = a.idx, bi = b.idx;
  auto out = tp->make(M, N, ng, nullptr);
  int oi = out.idx;
  {
    CEMat<Real> A(tp->node(ai).val.data(), M, K);
    CEMat<Real> B(tp->node(bi).val.data(), K, N);
    EMat<Real> C(tp->node(oi).val.data(), M, N);
    C.noalias() = A * B;
  }
  if (ng)
    tp->node(oi).backward = [tp, ai, bi, oi, M, K, N] {
      CEMat<Real> G(tp->node(oi).grad.data(), M, N);
      CEMat<Real> A(tp->node(ai).val.data(), M, K);
      CEMat<Real> B(tp->node(bi).val.data(), K, N);
      if (tp->node(ai).needs_grad) {
        EMat<Real> GA(tp->node(ai).grad.data(), M, K);
        GA.noalias() += G * B.transpose();
      }
      if (tp->node(bi).needs_grad) {
        EMat<Real> GB(tp->node(bi).grad.data(), K, N);
        GB.noalias() += A.transpose() * G;
      }
    };
  return out;
}

template T<float> matmul<float>(T<float>, T<float>);
template T<double> matmul<double>(T<double>, T<double>);

}  // namespace ops

void adam_step(std::vector<std::vector<float>>& params,
               const std::vector<std::vector<float>>& grads,
               const std::vector<std::string>& names, AdamState& state, double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(params[p].size(), 0.0f);
      state.v[p].assign(params[p].size(), 0.0f);
    }
  }
  for (std::size_t p = 0; p < params.size(); ++p)
    for (float g : grads[p])
      if (!std::isfinite(g))
        throw std::runtime_error("adam_step: non-finite gradient in parameter " +
                                 (p < names.size() ? names[p] : std::to_string(p)));
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size() != grads[p].size())
      throw std::invalid_argument("adam_step: shape mismatch in parameter " +
                                  (p < names.size() ? names[p] : std::to_string(p)));
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double g = grads[p][i];
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * g);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * g * g);
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      params[p][i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double finite_difference_check(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x,
                               const std::vector<double>& analytic, double eps) {
  if (x.size() != analytic.size())
    throw std::invalid_argument("finite_difference_check: size mismatch");
  double worst = 0.0;
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    double up = f(probe);
    probe[i] = x[i] - eps;
    double down = f(probe);
    probe[i] = x[i];
    double fd = (up - down) / (2.0 * eps);
    double err = std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace dgr
