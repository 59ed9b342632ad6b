#include "slotfill/lstm.hpp"

#include <cmath>
#include <string>

#include "slotfill/error.hpp"

namespace slotfill {

namespace {

Matrix init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-r, r);
  return m;
}

Vector concat(const Vector& a, const Vector& b) {
  Vector z(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) z[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) z[a.size() + i] = b[i];
  return z;
}

}  // namespace

LstmParams LstmParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
  LstmParams p;
  const std::size_t width = hidden + input;
  p.W_f = init_weight(hidden, width, rng);
  p.W_i = init_weight(hidden, width, rng);
  p.W_o = init_weight(hidden, width, rng);
  p.W_c = init_weight(hidden, width, rng);
  p.b_f = Vector(hidden);
  p.b_i = Vector(hidden);
  p.b_o = Vector(hidden);
  p.b_c = Vector(hidden);
  return p;
}

LstmGrads LstmGrads::zeros_like(const LstmParams& p) {
  LstmGrads g;
  g.dW_f = Matrix(p.W_f.rows, p.W_f.cols);
  g.dW_i = Matrix(p.W_i.rows, p.W_i.cols);
  g.dW_o = Matrix(p.W_o.rows, p.W_o.cols);
  g.dW_c = Matrix(p.W_c.rows, p.W_c.cols);
  g.db_f = Vector(p.b_f.size());
  g.db_i = Vector(p.b_i.size());
  g.db_o = Vector(p.b_o.size());
  g.db_c = Vector(p.b_c.size());
  return g;
}

void LstmGrads::add(const LstmGrads& o) {
  for (std::size_t i = 0; i < dW_f.data.size(); ++i) dW_f.data[i] += o.dW_f.data[i];
  for (std::size_t i = 0; i < dW_i.data.size(); ++i) dW_i.data[i] += o.dW_i.data[i];
  for (std::size_t i = 0; i < dW_o.data.size(); ++i) dW_o.data[i] += o.dW_o.data[i];
  for (std::size_t i = 0; i < dW_c.data.size(); ++i) dW_c.data[i] += o.dW_c.data[i];
  add_inplace(db_f, o.db_f);
  add_inplace(db_i, o.db_i);
  add_inplace(db_o, o.db_o);
  add_inplace(db_c, o.db_c);
}

std::vector<std::span<double>> LstmGrads::spans() {
  return {std::span<double>(dW_f.data), std::span<double>(dW_i.data),
          std::span<double>(dW_o.data), std::span<double>(dW_c.data),
          std::span<double>(db_f.data), std::span<double>(db_i.data),
          std::span<double>(db_o.data), std::span<double>(db_c.data)};
}

std::pair<LstmState, StepTrace> lstm_cell_forward(const LstmParams& params,
                                                  const LstmState& prev, const Vector& x) {
  const std::size_t hidden = params.hidden();
  if (x.size() != params.input_dim()) {
    throw ShapeError("lstm_cell_forward: input length " + std::to_string(x.size()) +
                     ", cell expects " + std::to_string(params.input_dim()));
  }
  if (prev.h.size() != hidden || prev.C.size() != hidden) {
    throw ShapeError("lstm_cell_forward: state size " + std::to_string(prev.h.size()) +
                     ", cell hidden is " + std::to_string(hidden));
  }

  StepTrace t;
  t.z = concat(prev.h, x);
  t.C_prev = prev.C;

  Vector af = matvec(params.W_f, t.z);
  Vector ai = matvec(params.W_i, t.z);
  Vector ao = matvec(params.W_o, t.z);
  Vector ac = matvec(params.W_c, t.z);
  add_inplace(af, params.b_f);
  add_inplace(ai, params.b_i);
  add_inplace(ao, params.b_o);
  add_inplace(ac, params.b_c);

  t.f = sigmoid(af);
  t.i = sigmoid(ai);
  t.o = sigmoid(ao);
  t.c_tilde = tanh_vec(ac);

  t.C = Vector(hidden);
  t.h = Vector(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    t.C[j] = t.f[j] * prev.C[j] + t.i[j] * t.c_tilde[j];
    t.h[j] = t.o[j] * std::tanh(t.C[j]);
  }

  LstmState next{t.h, t.C};
  return {std::move(next), std::move(t)};
}

LayerRun run_layer(const LstmParams& params, const std::vector<Vector>& inputs) {
  LayerRun run;
  run.h_seq.reserve(inputs.size());
  run.trace.reserve(inputs.size());
  LstmState state = LstmState::zero(params.hidden());
  for (const Vector& x : inputs) {
    auto [next, t] = lstm_cell_forward(params, state, x);
    state = std::move(next);
    run.h_seq.push_back(state.h);
    run.trace.push_back(std::move(t));
  }
  return run;
}

BpttResult bptt_backward(const LstmParams& params, const LayerTrace& trace,
                         const std::vector<Vector>& dh_upstream) {
  if (trace.size() != dh_upstream.size()) {
    throw ShapeError("bptt_backward: trace length " + std::to_string(trace.size()) +
                     " vs upstream gradient length " + std::to_string(dh_upstream.size()));
  }
  const std::size_t hidden = params.hidden();
  const std::size_t input = params.input_dim();

  BpttResult res;
  res.grads = LstmGrads::zeros_like(params);
  res.dx.assign(trace.size(), Vector(input));

  Vector dh_carry(hidden);  // recurrent gradient into h_k from step k+1
  Vector dC_carry(hidden);  // recurrent gradient into C_k from step k+1

  for (std::size_t idx = trace.size(); idx-- > 0;) {
    const StepTrace& t = trace[idx];

    Vector dh(hidden);
    for (std::size_t j = 0; j < hidden; ++j) dh[j] = dh_upstream[idx][j] + dh_carry[j];

    // h = o * tanh(C)
    Vector da_f(hidden), da_i(hidden), da_o(hidden), da_c(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double tC = std::tanh(t.C[j]);
      const double do_ = dh[j] * tC;
      const double dC = dC_carry[j] + dh[j] * t.o[j] * (1.0 - tC * tC);
      const double df = dC * t.C_prev[j];
      const double di = dC * t.c_tilde[j];
      const double dct = dC * t.i[j];
      dC_carry[j] = dC * t.f[j];
      // through the gate nonlinearities to the pre-activations
      da_f[j] = df * t.f[j] * (1.0 - t.f[j]);
      da_i[j] = di * t.i[j] * (1.0 - t.i[j]);
      da_o[j] = do_ * t.o[j] * (1.0 - t.o[j]);
      da_c[j] = dct * (1.0 - t.c_tilde[j] * t.c_tilde[j]);
    }

    outer_add(da_f, t.z, res.grads.dW_f);
    outer_add(da_i, t.z, res.grads.dW_i);
    outer_add(da_o, t.z, res.grads.dW_o);
    outer_add(da_c, t.z, res.grads.dW_c);
    add_inplace(res.grads.db_f, da_f);
    add_inplace(res.grads.db_i, da_i);
    add_inplace(res.grads.db_o, da_o);
    add_inplace(res.grads.db_c, da_c);

    Vector dz(hidden + input);
    matvec_transpose_add(params.W_f, da_f, dz);
    matvec_transpose_add(params.W_i, da_i, dz);
    matvec_transpose_add(params.W_o, da_o, dz);
    matvec_transpose_add(params.W_c, da_c, dz);

    for (std::size_t j = 0; j < hidden; ++j) dh_carry[j] = dz[j];
    for (std::size_t j = 0; j < input; ++j) res.dx[idx][j] = dz[hidden + j];
  }
  return res;
}

StackedRun run_stacked_forward(const std::vector<LstmParams>& layers,
                               const std::vector<Vector>& inputs, double keep_prob,
                               Rng* rng) {
  const bool training = keep_prob < 1.0 && rng != nullptr;
  StackedRun run;
  run.trace.layers.resize(layers.size());
  if (training) run.trace.masks.resize(layers.size() > 0 ? layers.size() - 1 : 0);

  std::vector<Vector> cur = inputs;
  for (std::size_t b = 0; b < layers.size(); ++b) {
    LayerRun lr = run_layer(layers[b], cur);
    run.trace.layers[b] = std::move(lr.trace);
    cur = std::move(lr.h_seq);
    if (training && b + 1 < layers.size()) {
      auto& masks = run.trace.masks[b];
      masks.reserve(cur.size());
      for (Vector& h : cur) {
        Vector m = dropout_mask(h.size(), keep_prob, *rng);
        for (std::size_t j = 0; j < h.size(); ++j) h[j] *= m[j];
        masks.push_back(std::move(m));
      }
    }
  }
  run.top_h = std::move(cur);
  return run;
}

StackedBpttResult bptt_backward_stacked(const std::vector<LstmParams>& layers,
                                        const StackedTrace& trace,
                                        const std::vector<Vector>& dh_top) {
  if (trace.layers.size() != layers.size()) {
    throw ShapeError("bptt_backward_stacked: trace has " + std::to_string(trace.layers.size()) +
                     " layers, params have " + std::to_string(layers.size()));
  }
  StackedBpttResult res;
  res.grads.resize(layers.size());

  std::vector<Vector> dh = dh_top;
  for (std::size_t b = layers.size(); b-- > 0;) {
    BpttResult r = bptt_backward(layers[b], trace.layers[b], dh);
    res.grads[b] = std::move(r.grads);
    if (b == 0) {
      res.dx = std::move(r.dx);
      break;
    }
    // r.dx is the gradient on the (possibly dropped) output of layer b-1.
    dh = std::move(r.dx);
    if (!trace.masks.empty() && !trace.masks[b - 1].empty()) {
      const auto& masks = trace.masks[b - 1];
      for (std::size_t k = 0; k < dh.size(); ++k) {
        for (std::size_t j = 0; j < dh[k].size(); ++j) dh[k][j] *= masks[k][j];
      }
    }
  }
  return res;
}

BidiRun run_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                          const std::vector<Vector>& inputs) {
  if (fwd.input_dim() != bwd.input_dim()) {
    throw ShapeError("run_bidirectional: directions disagree on input width, " +
                     std::to_string(fwd.input_dim()) + " vs " + std::to_string(bwd.input_dim()));
  }
  BidiRun run;
  LayerRun f = run_layer(fwd, inputs);
  run.h_fwd = std::move(f.h_seq);
  run.trace_fwd = std::move(f.trace);

  std::vector<Vector> rev(inputs.rbegin(), inputs.rend());
  LayerRun b = run_layer(bwd, rev);
  run.trace_bwd = std::move(b.trace);
  run.h_bwd.assign(b.h_seq.rbegin(), b.h_seq.rend());
  return run;
}

BidiBpttResult bptt_backward_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                                           const BidiRun& run,
                                           const std::vector<Vector>& dh_fwd,
                                           const std::vector<Vector>& dh_bwd) {
  const std::size_t len = run.trace_fwd.size();
  if (dh_fwd.size() != len || dh_bwd.size() != len) {
    throw ShapeError("bptt_backward_bidirectional: gradient length mismatch");
  }
  BidiBpttResult res;

  BpttResult f = bptt_backward(fwd, run.trace_fwd, dh_fwd);
  res.grads_fwd = std::move(f.grads);
  res.dx = std::move(f.dx);

  std::vector<Vector> dh_bwd_rev(dh_bwd.rbegin(), dh_bwd.rend());
  BpttResult b = bptt_backward(bwd, run.trace_bwd, dh_bwd_rev);
  res.grads_bwd = std::move(b.grads);
  for (std::size_t k = 0; k < len; ++k) {
    add_inplace(res.dx[k], b.dx[len - 1 - k]);
  }
  return res;
}

}  // namespace slotfill
