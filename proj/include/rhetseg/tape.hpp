#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rhetseg/crf.hpp"
#include "rhetseg/errors.hpp"

namespace rhetseg::autodiff {

using Matrix = Eigen::MatrixXd;

// Define-by-run reverse-mode tape. Vars are indices into the tape; backward
// replays the recorded closures in reverse creation order. One tape per
// forward pass; parameters enter as leaves via input().
class Tape {
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;  // pulls this node's grad into its inputs
  };
  std::vector<Node> nodes_;

  int push(Matrix value, std::function<void()> backward = {}) {
    Node n;
    n.value = std::move(value);
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

 public:
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

  int input(Matrix value) { return push(std::move(value)); }

  int matmul(int a, int b) {
    const int id = push(value(a) * value(b), nullptr);
    nodes_[id].backward = [this, id, a, b]() {
      nodes_[a].grad += nodes_[id].grad * nodes_[b].value.transpose();
      nodes_[b].grad += nodes_[a].value.transpose() * nodes_[id].grad;
    };
    return id;
  }

  int add(int a, int b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw ArgumentError("add: shape mismatch");
    const int id = push(value(a) + value(b), nullptr);
    nodes_[id].backward = [this, id, a, b]() {
      nodes_[a].grad += nodes_[id].grad;
      nodes_[b].grad += nodes_[id].grad;
    };
    return id;
  }

  // Hadamard product; needed for LSTM gating
  int mul(int a, int b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw ArgumentError("mul: shape mismatch");
    const int id = push(value(a).cwiseProduct(value(b)), nullptr);
    nodes_[id].backward = [this, id, a, b]() {
      nodes_[a].grad += nodes_[id].grad.cwiseProduct(nodes_[b].value);
      nodes_[b].grad += nodes_[id].grad.cwiseProduct(nodes_[a].value);
    };
    return id;
  }

  int scale(int a, double s) {
    const int id = push(value(a) * s, nullptr);
    nodes_[id].backward = [this, id, a, s]() { nodes_[a].grad += s * nodes_[id].grad; };
    return id;
  }

  int tanh(int a) {
    const int id = push(value(a).array().tanh().matrix(), nullptr);
    nodes_[id].backward = [this, id, a]() {
      nodes_[a].grad.array() +=
          nodes_[id].grad.array() * (1.0 - nodes_[id].value.array().square());
    };
    return id;
  }

  int sigmoid(int a) {
    const int id =
        push((1.0 / (1.0 + (-value(a).array()).exp())).matrix(), nullptr);
    nodes_[id].backward = [this, id, a]() {
      const auto& s = nodes_[id].value.array();
      nodes_[a].grad.array() += nodes_[id].grad.array() * s * (1.0 - s);
    };
    return id;
  }

  // vertical stack [a; b]
  int concat_rows(int a, int b) {
    if (value(a).cols() != value(b).cols())
      throw ArgumentError("concat_rows: column mismatch");
    Matrix v(value(a).rows() + value(b).rows(), value(a).cols());
    v << value(a), value(b);
    const int id = push(std::move(v), nullptr);
    const long ra = value(a).rows();
    nodes_[id].backward = [this, id, a, b, ra]() {
      nodes_[a].grad += nodes_[id].grad.topRows(ra);
      nodes_[b].grad += nodes_[id].grad.bottomRows(nodes_[id].grad.rows() - ra);
    };
    return id;
  }

  // horizontal stack of equal-height columns blocks
  int concat_cols(const std::vector<int>& ids) {
    if (ids.empty()) throw ArgumentError("concat_cols: empty");
    long cols = 0;
    for (int v : ids) cols += value(v).cols();
    Matrix m(value(ids[0]).rows(), cols);
    long at = 0;
    for (int v : ids) {
      m.middleCols(at, value(v).cols()) = value(v);
      at += value(v).cols();
    }
    const int id = push(std::move(m), nullptr);
    nodes_[id].backward = [this, id, ids]() {
      long at = 0;
      for (int v : ids) {
        const long c = nodes_[v].value.cols();
        nodes_[v].grad += nodes_[id].grad.middleCols(at, c);
        at += c;
      }
    };
    return id;
  }

  int slice_rows(int a, long start, long len) {
    const int id = push(value(a).middleRows(start, len), nullptr);
    nodes_[id].backward = [this, id, a, start, len]() {
      nodes_[a].grad.middleRows(start, len) += nodes_[id].grad;
    };
    return id;
  }

  int transpose(int a) {
    const int id = push(value(a).transpose(), nullptr);
    nodes_[id].backward = [this, id, a]() {
      nodes_[a].grad += nodes_[id].grad.transpose();
    };
    return id;
  }

  // mean cross-entropy over columns of a K x T logit matrix
  int softmax_xent(int logits, const std::vector<int>& targets) {
    const Matrix& l = value(logits);
    const long K = l.rows();
    const long T = l.cols();
    if (static_cast<long>(targets.size()) != T)
      throw ArgumentError("softmax_xent: target count must match columns");
    Matrix probs(K, T);
    double loss = 0.0;
    for (long t = 0; t < T; ++t) {
      const double m = l.col(t).maxCoeff();
      const Eigen::ArrayXd e = (l.col(t).array() - m).exp();
      const double z = e.sum();
      probs.col(t) = (e / z).matrix();
      loss += std::log(z) + m - l(targets[static_cast<std::size_t>(t)], t);
    }
    loss /= static_cast<double>(T);
    const int id = push(Matrix::Constant(1, 1, loss), nullptr);
    nodes_[id].backward = [this, id, logits, targets, probs, T]() {
      const double up = nodes_[id].grad(0, 0) / static_cast<double>(T);
      Matrix g = probs;
      for (long t = 0; t < T; ++t) g(targets[static_cast<std::size_t>(t)], t) -= 1.0;
      nodes_[logits].grad += up * g;
    };
    return id;
  }

  // linear-chain CRF negative log-likelihood as a fused op; emissions T x K,
  // transitions K x K, start/stop K x 1
  int crf_nll(int emissions, int transitions, int start, int stop,
              const std::vector<int>& gold) {
    crf::CrfParams p;
    p.transitions = value(transitions);
    p.start = value(start).col(0);
    p.stop = value(stop).col(0);
    auto result = crf::nll_and_grad(value(emissions), p, gold);
    const double nll = result.first;
    const crf::CrfGrad g = std::move(result.second);
    const int id = push(Matrix::Constant(1, 1, nll), nullptr);
    nodes_[id].backward = [this, id, emissions, transitions, start, stop, g]() {
      const double up = nodes_[id].grad(0, 0);
      nodes_[emissions].grad += up * g.d_em;
      nodes_[transitions].grad += up * g.d_params.transitions;
      nodes_[start].grad += up * g.d_params.start;
      nodes_[stop].grad += up * g.d_params.stop;
    };
    return id;
  }

  // seeds d(out)/d(out) = 1 and sweeps the tape in reverse
  void backward(int out) {
    if (value(out).rows() != 1 || value(out).cols() != 1)
      throw ArgumentError("backward: output must be scalar");
    nodes_[static_cast<std::size_t>(out)].grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;)
      if (nodes_[i].backward) nodes_[i].backward();
  }
};

}  // namespace rhetseg::autodiff
