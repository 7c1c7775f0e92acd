#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "rhetseg/errors.hpp"

namespace rhetseg::crf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Transition scores plus explicit start/stop vectors. Keeping start/stop out
// of the label set lets an always-terminal label be learned through stop
// scores without padding the tag alphabet.
struct CrfParams {
  Matrix transitions;  // K x K, [from][to]
  Vector start;        // K
  Vector stop;         // K

  int num_labels() const { return static_cast<int>(start.size()); }

  static CrfParams zeros(int k) {
    CrfParams p;
    p.transitions = Matrix::Zero(k, k);
    p.start = Vector::Zero(k);
    p.stop = Vector::Zero(k);
    return p;
  }

  CrfParams& operator+=(const CrfParams& o) {
    transitions += o.transitions;
    start += o.start;
    stop += o.stop;
    return *this;
  }
};

namespace detail {

inline double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

inline void check_instance(const Matrix& em, const CrfParams& p) {
  if (em.rows() < 1) throw ArgumentError("need at least one position");
  if (em.cols() != p.num_labels() || p.transitions.rows() != p.num_labels() ||
      p.transitions.cols() != p.num_labels() || p.stop.size() != p.num_labels())
    throw ArgumentError("emission/parameter dimensions disagree");
}

}  // namespace detail

inline double sequence_score(const Matrix& em, const CrfParams& p,
                             const std::vector<int>& labels) {
  detail::check_instance(em, p);
  const auto T = static_cast<std::size_t>(em.rows());
  if (labels.size() != T)
    throw ArgumentError("label sequence length does not match emissions");
  double s = p.start(labels[0]) + em(0, labels[0]);
  for (std::size_t t = 1; t < T; ++t)
    s += p.transitions(labels[t - 1], labels[t]) + em(static_cast<long>(t), labels[t]);
  s += p.stop(labels[T - 1]);
  return s;
}

// log sum over all K^T sequences of exp(sequence_score), by the forward
// recursion in log space
inline double log_partition(const Matrix& em, const CrfParams& p) {
  detail::check_instance(em, p);
  const long T = em.rows();
  const int K = p.num_labels();
  Vector alpha = p.start + em.row(0).transpose();
  Vector next(K);
  for (long t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j)
      next(j) = em(t, j) + detail::logsumexp(alpha + p.transitions.col(j));
    alpha = next;
  }
  return detail::logsumexp(alpha + p.stop);
}

// max-score decoding; ties at each backtrack step fall to the lowest label
// index (strict > keeps the first maximum)
inline std::pair<std::vector<int>, double> viterbi(const Matrix& em,
                                                   const CrfParams& p) {
  detail::check_instance(em, p);
  const long T = em.rows();
  const int K = p.num_labels();
  Matrix delta(T, K);
  Eigen::MatrixXi back(T, K);
  delta.row(0) = (p.start + em.row(0).transpose()).transpose();
  for (long t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j) {
      int arg = 0;
      double best = delta(t - 1, 0) + p.transitions(0, j);
      for (int i = 1; i < K; ++i) {
        const double s = delta(t - 1, i) + p.transitions(i, j);
        if (s > best) {
          best = s;
          arg = i;
        }
      }
      delta(t, j) = best + em(t, j);
      back(t, j) = arg;
    }
  }
  int last = 0;
  double best = delta(T - 1, 0) + p.stop(0);
  for (int j = 1; j < K; ++j) {
    const double s = delta(T - 1, j) + p.stop(j);
    if (s > best) {
      best = s;
      last = j;
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(T));
  labels[static_cast<std::size_t>(T - 1)] = last;
  for (long t = T - 1; t > 0; --t)
    labels[static_cast<std::size_t>(t - 1)] = back(t, labels[static_cast<std::size_t>(t)]);
  return {labels, best};
}

struct CrfGrad {
  Matrix d_em;  // T x K
  CrfParams d_params;
};

// Negative log-likelihood of the gold sequence and its exact gradients,
// via forward-backward. Gradient entries are (marginal - indicator).
inline std::pair<double, CrfGrad> nll_and_grad(const Matrix& em, const CrfParams& p,
                                               const std::vector<int>& gold) {
  detail::check_instance(em, p);
  const long T = em.rows();
  const int K = p.num_labels();
  if (gold.size() != static_cast<std::size_t>(T))
    throw ArgumentError("gold length does not match emissions");

  Matrix alpha(T, K), beta(T, K);
  alpha.row(0) = (p.start + em.row(0).transpose()).transpose();
  for (long t = 1; t < T; ++t)
    for (int j = 0; j < K; ++j)
      alpha(t, j) = em(t, j) +
                    detail::logsumexp(alpha.row(t - 1).transpose() + p.transitions.col(j));
  beta.row(T - 1) = p.stop.transpose();
  for (long t = T - 2; t >= 0; --t)
    for (int i = 0; i < K; ++i)
      beta(t, i) = detail::logsumexp(p.transitions.row(i).transpose() +
                                     em.row(t + 1).transpose() +
                                     beta.row(t + 1).transpose());

  const double log_z = detail::logsumexp(alpha.row(T - 1).transpose() + p.stop);
  const double nll = log_z - sequence_score(em, p, gold);

  CrfGrad g;
  g.d_em = Matrix::Zero(T, K);
  g.d_params = CrfParams::zeros(K);

  // unary marginals
  for (long t = 0; t < T; ++t)
    for (int y = 0; y < K; ++y)
      g.d_em(t, y) = std::exp(alpha(t, y) + beta(t, y) - log_z);

  g.d_params.start = g.d_em.row(0).transpose();
  g.d_params.stop = g.d_em.row(T - 1).transpose();

  // pairwise marginals
  for (long t = 0; t + 1 < T; ++t)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        g.d_params.transitions(i, j) +=
            std::exp(alpha(t, i) + p.transitions(i, j) + em(t + 1, j) +
                     beta(t + 1, j) - log_z);

  // subtract the observed statistics
  for (long t = 0; t < T; ++t) g.d_em(t, gold[static_cast<std::size_t>(t)]) -= 1.0;
  g.d_params.start(gold[0]) -= 1.0;
  g.d_params.stop(gold[static_cast<std::size_t>(T - 1)]) -= 1.0;
  for (long t = 0; t + 1 < T; ++t)
    g.d_params.transitions(gold[static_cast<std::size_t>(t)],
                           gold[static_cast<std::size_t>(t + 1)]) -= 1.0;

  return {nll, std::move(g)};
}

}  // namespace rhetseg::crf
