#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slotfill/rng.hpp"

namespace slotfill {

struct Vector {
  std::vector<double> data;

  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data(n, fill) {}
  explicit Vector(std::vector<double> d) : data(std::move(d)) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool operator==(const Vector&) const = default;
};

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);

// y = M x
Vector matvec(const Matrix& m, const Vector& x);

// y += M^T x   (adjoint of matvec; used throughout backprop)
void matvec_transpose_add(const Matrix& m, const Vector& x, Vector& y);

// M += a b^T
void outer_add(Vector const& a, Vector const& b, Matrix& m);

void add_inplace(Vector& a, const Vector& b);

Vector sigmoid(const Vector& v);
Vector tanh_vec(const Vector& v);
Vector softmax(const Vector& v);

double cross_entropy(const Vector& pred, std::size_t gold_index);

// Per-parameter RMSProp accumulator. One state per parameter tensor.
struct RmsPropState {
  std::vector<double> cache;
  double alpha;
  double rho;
  double epsilon;

  RmsPropState(std::size_t n, double alpha, double rho = 0.9, double epsilon = 1e-8);
};

// cache <- rho*cache + (1-rho)*g^2 ; param <- param - alpha*g/(sqrt(cache)+eps)
void rmsprop_step(std::span<double> param, std::span<const double> grad, RmsPropState& state);
void rmsprop_step(Matrix& param, const Matrix& grad, RmsPropState& state);
void rmsprop_step(Vector& param, const Vector& grad, RmsPropState& state);

// Inverted-dropout mask: entries are 1/keep_prob with probability keep_prob,
// else 0. Callers apply it in training mode only.
Vector dropout_mask(std::size_t len, double keep_prob, Rng& rng);

// Scales grads in place so their global L2 norm is at most max_norm.
void clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm);

}  // namespace slotfill
