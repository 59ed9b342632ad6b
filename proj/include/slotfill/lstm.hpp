#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "slotfill/rng.hpp"
#include "slotfill/tensor.hpp"

namespace slotfill {

// Gate weights over the concatenation [h_prev, x] (h first), one bias each.
struct LstmParams {
  Matrix W_f, W_i, W_o, W_c;  // hidden x (hidden + input)
  Vector b_f, b_i, b_o, b_c;  // hidden

  std::size_t hidden() const { return b_f.size(); }
  std::size_t input_dim() const { return W_f.cols - hidden(); }

  // Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero biases.
  static LstmParams init(std::size_t hidden, std::size_t input, Rng& rng);
};

struct LstmState {
  Vector h, C;

  static LstmState zero(std::size_t hidden) {
    return LstmState{Vector(hidden), Vector(hidden)};
  }
};

// Cached activations of one timestep, everything the backward pass needs.
struct StepTrace {
  Vector z;  // [h_prev, x]
  Vector f, i, o, c_tilde;
  Vector C_prev;
  Vector C, h;
};

using LayerTrace = std::vector<StepTrace>;

struct LstmGrads {
  Matrix dW_f, dW_i, dW_o, dW_c;
  Vector db_f, db_i, db_o, db_c;

  static LstmGrads zeros_like(const LstmParams& p);
  void add(const LstmGrads& other);
  std::vector<std::span<double>> spans();
};

std::pair<LstmState, StepTrace> lstm_cell_forward(const LstmParams& params,
                                                  const LstmState& prev, const Vector& x);

// One layer over a sequence, zero initial state.
struct LayerRun {
  std::vector<Vector> h_seq;
  LayerTrace trace;
};
LayerRun run_layer(const LstmParams& params, const std::vector<Vector>& inputs);

// Reverse-mode gradients of one layer. dh_upstream holds the loss gradient
// on each step's output h; recurrent flow between steps is handled here.
struct BpttResult {
  LstmGrads grads;
  std::vector<Vector> dx;
};
BpttResult bptt_backward(const LstmParams& params, const LayerTrace& trace,
                         const std::vector<Vector>& dh_upstream);

// Stacked layers; layer l+1 consumes layer l's h, with an inverted-dropout
// mask between them in training mode (keep_prob < 1 and rng given).
struct StackedTrace {
  std::vector<LayerTrace> layers;
  // masks[b][k]: mask applied to layer b's output at step k before it feeds
  // layer b+1. Empty when running in evaluation mode.
  std::vector<std::vector<Vector>> masks;
};
struct StackedRun {
  std::vector<Vector> top_h;
  StackedTrace trace;
};
StackedRun run_stacked_forward(const std::vector<LstmParams>& layers,
                               const std::vector<Vector>& inputs, double keep_prob = 1.0,
                               Rng* rng = nullptr);

struct StackedBpttResult {
  std::vector<LstmGrads> grads;
  std::vector<Vector> dx;
};
StackedBpttResult bptt_backward_stacked(const std::vector<LstmParams>& layers,
                                        const StackedTrace& trace,
                                        const std::vector<Vector>& dh_top);

// One layer per direction over the same inputs; both ends zero-initialized.
struct BidiRun {
  std::vector<Vector> h_fwd;  // left-to-right recurrence, time order
  std::vector<Vector> h_bwd;  // right-to-left recurrence, time order
  LayerTrace trace_fwd;       // indexed by time
  LayerTrace trace_bwd;       // indexed by reversed time
};
BidiRun run_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                          const std::vector<Vector>& inputs);

struct BidiBpttResult {
  LstmGrads grads_fwd, grads_bwd;
  std::vector<Vector> dx;
};
BidiBpttResult bptt_backward_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                                           const BidiRun& run,
                                           const std::vector<Vector>& dh_fwd,
                                           const std::vector<Vector>& dh_bwd);

}  // namespace slotfill
