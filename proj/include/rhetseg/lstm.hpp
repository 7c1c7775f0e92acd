#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rhetseg/errors.hpp"
#include "rhetseg/tape.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg::autodiff {

// One LSTM direction: fused gate weights over [x; h_prev], gate order
// i, f, o, g within the 4h rows.
struct LstmParams {
  Matrix w;  // 4h x (in + h)
  Matrix b;  // 4h x 1

  long hidden() const { return w.rows() / 4; }

  static LstmParams init(long input_dim, long hidden_dim, SeededRng& rng) {
    LstmParams p;
    p.w = Matrix::Zero(4 * hidden_dim, input_dim + hidden_dim);
    for (long i = 0; i < p.w.rows(); ++i)
      for (long j = 0; j < p.w.cols(); ++j) p.w(i, j) = rng.uniform(-0.1, 0.1);
    p.b = Matrix::Zero(4 * hidden_dim, 1);
    p.b.middleRows(hidden_dim, hidden_dim).array() = 1.0;  // forget gate open
    return p;
  }
};

struct LstmVars {
  int w = -1;
  int b = -1;
};

inline LstmVars register_lstm(Tape& tape, const LstmParams& p) {
  return {tape.input(p.w), tape.input(p.b)};
}

// Unrolls one direction over column-vector inputs; returns the per-step
// hidden-state vars.
inline std::vector<int> run_lstm(Tape& tape, const LstmVars& vars,
                                 const std::vector<int>& xs, long hidden) {
  if (xs.empty()) throw ArgumentError("lstm over empty sequence");
  std::vector<int> hs;
  int h = tape.input(Matrix::Zero(hidden, 1));
  int c = tape.input(Matrix::Zero(hidden, 1));
  for (int x : xs) {
    const int xh = tape.concat_rows(x, h);
    const int z = tape.add(tape.matmul(vars.w, xh), vars.b);
    const int i = tape.sigmoid(tape.slice_rows(z, 0, hidden));
    const int f = tape.sigmoid(tape.slice_rows(z, hidden, hidden));
    const int o = tape.sigmoid(tape.slice_rows(z, 2 * hidden, hidden));
    const int g = tape.tanh(tape.slice_rows(z, 3 * hidden, hidden));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh(c));
    hs.push_back(h);
  }
  return hs;
}

struct BiLstmParams {
  LstmParams fwd;
  LstmParams bwd;

  static BiLstmParams init(long input_dim, long hidden_dim, SeededRng& rng) {
    return {LstmParams::init(input_dim, hidden_dim, rng),
            LstmParams::init(input_dim, hidden_dim, rng)};
  }
};

struct BiLstmVars {
  LstmVars fwd;
  LstmVars bwd;
};

inline BiLstmVars register_bilstm(Tape& tape, const BiLstmParams& p) {
  return {register_lstm(tape, p.fwd), register_lstm(tape, p.bwd)};
}

// final-state summary: [h_fwd(T); h_bwd(T)], a 2h x 1 vector
inline int bilstm_final(Tape& tape, const BiLstmVars& vars,
                        const std::vector<int>& xs, long hidden) {
  const auto fwd = run_lstm(tape, vars.fwd, xs, hidden);
  std::vector<int> rev(xs.rbegin(), xs.rend());
  const auto bwd = run_lstm(tape, vars.bwd, rev, hidden);
  return tape.concat_rows(fwd.back(), bwd.back());
}

// per-position contextual outputs: position t gets [h_fwd(t); h_bwd(t)]
inline std::vector<int> bilstm_sequence(Tape& tape, const BiLstmVars& vars,
                                        const std::vector<int>& xs, long hidden) {
  const auto fwd = run_lstm(tape, vars.fwd, xs, hidden);
  std::vector<int> rev(xs.rbegin(), xs.rend());
  const auto bwd = run_lstm(tape, vars.bwd, rev, hidden);
  std::vector<int> out;
  const std::size_t T = xs.size();
  for (std::size_t t = 0; t < T; ++t)
    out.push_back(tape.concat_rows(fwd[t], bwd[T - 1 - t]));
  return out;
}

}  // namespace rhetseg::autodiff
