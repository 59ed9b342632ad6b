#include "slotfill/tensor.hpp"

#include <cmath>
#include <string>

#include "slotfill/error.hpp"

namespace slotfill {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix c(a.rows, b.cols, 0.0);
  // ikj order: the inner loop walks contiguous rows of b and c.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

Vector matvec(const Matrix& m, const Vector& x) {
  if (m.cols != x.size()) {
    throw ShapeError("matvec: matrix " + shape_str(m) + " vs vector of length " +
                     std::to_string(x.size()));
  }
  Vector y(m.rows);
  const std::size_t n = m.cols;
  const double* xp = x.data.data();
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    // Four accumulators break the FP dependency chain. The summation order
    // is fixed by this code, so results stay bit-identical everywhere.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
      a0 += r[k] * xp[k];
      a1 += r[k + 1] * xp[k + 1];
      a2 += r[k + 2] * xp[k + 2];
      a3 += r[k + 3] * xp[k + 3];
    }
    double acc = (a0 + a1) + (a2 + a3);
    for (; k < n; ++k) acc += r[k] * xp[k];
    y[i] = acc;
  }
  return y;
}

void matvec_transpose_add(const Matrix& m, const Vector& x, Vector& y) {
  if (m.rows != x.size() || m.cols != y.size()) {
    throw ShapeError("matvec_transpose_add: matrix " + shape_str(m) + " vs vectors " +
                     std::to_string(x.size()) + ", " + std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double xi = x[i];
    const double* r = m.row(i);
    double* yp = y.data.data();
    for (std::size_t j = 0; j < m.cols; ++j) {
      yp[j] += xi * r[j];
    }
  }
}

void outer_add(Vector const& a, Vector const& b, Matrix& m) {
  if (m.rows != a.size() || m.cols != b.size()) {
    throw ShapeError("outer_add: matrix " + shape_str(m) + " vs vectors " +
                     std::to_string(a.size()) + ", " + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double ai = a[i];
    double* r = m.row(i);
    const double* bp = b.data.data();
    for (std::size_t j = 0; j < m.cols; ++j) {
      r[j] += ai * bp[j];
    }
  }
}

void add_inplace(Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ShapeError("add_inplace: lengths " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    // Split form saturates cleanly at both ends instead of overflowing exp.
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

Vector tanh_vec(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vector softmax(const Vector& v) {
  if (v.size() == 0) {
    throw ShapeError("softmax: empty input");
  }
  double mx = v[0];
  for (std::size_t i = 1; i < v.size(); ++i) mx = std::max(mx, v[i]);
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= sum;
  return out;
}

double cross_entropy(const Vector& pred, std::size_t gold_index) {
  if (gold_index >= pred.size()) {
    throw IndexError("cross_entropy: gold index " + std::to_string(gold_index) +
                     " out of range for " + std::to_string(pred.size()) + " classes");
  }
  const double p = std::max(pred[gold_index], 1e-12);
  return -std::log(p);
}

RmsPropState::RmsPropState(std::size_t n, double alpha_, double rho_, double epsilon_)
    : cache(n, 0.0), alpha(alpha_), rho(rho_), epsilon(epsilon_) {
  if (alpha <= 0.0) throw ConfigError("RmsPropState: alpha must be positive");
  if (rho <= 0.0 || rho >= 1.0) throw ConfigError("RmsPropState: rho must be in (0,1)");
  if (epsilon <= 0.0) throw ConfigError("RmsPropState: epsilon must be positive");
}

void rmsprop_step(std::span<double> param, std::span<const double> grad, RmsPropState& state) {
  if (param.size() != grad.size() || param.size() != state.cache.size()) {
    throw ShapeError("rmsprop_step: param " + std::to_string(param.size()) + ", grad " +
                     std::to_string(grad.size()) + ", cache " +
                     std::to_string(state.cache.size()));
  }
  const double rho = state.rho;
  const double one_minus = 1.0 - rho;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.cache[i] = rho * state.cache[i] + one_minus * g * g;
    param[i] -= state.alpha * g / (std::sqrt(state.cache[i]) + state.epsilon);
  }
}

void rmsprop_step(Matrix& param, const Matrix& grad, RmsPropState& state) {
  if (param.rows != grad.rows || param.cols != grad.cols) {
    throw ShapeError("rmsprop_step: param " + shape_str(param) + " vs grad " + shape_str(grad));
  }
  rmsprop_step(std::span<double>(param.data), std::span<const double>(grad.data), state);
}

void rmsprop_step(Vector& param, const Vector& grad, RmsPropState& state) {
  rmsprop_step(std::span<double>(param.data), std::span<const double>(grad.data), state);
}

Vector dropout_mask(std::size_t len, double keep_prob, Rng& rng) {
  if (keep_prob <= 0.0 || keep_prob > 1.0) {
    throw ConfigError("dropout_mask: keep_prob must be in (0,1], got " +
                      std::to_string(keep_prob));
  }
  Vector mask(len);
  const double scale = 1.0 / keep_prob;
  for (std::size_t i = 0; i < len; ++i) {
    mask[i] = rng.uniform() < keep_prob ? scale : 0.0;
  }
  return mask;
}

void clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (const auto& g : grads) {
    for (double& v : g) v *= scale;
  }
}

}  // namespace slotfill
