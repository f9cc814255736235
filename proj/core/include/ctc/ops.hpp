#pragma once

#include <cstdint>
#include <vector>

#include "ctc/tape.hpp"
#include "ctc/tensor.hpp"

namespace ctc {

enum class Act { relu, tanh, sigmoid };

// All ops compute eagerly, validate shapes (std::invalid_argument on
// mismatch), and record a backward closure when a tape scope is active.

// Elementwise add. Either both shapes match, or b has rank 1 and its extent
// equals a's last axis (bias broadcast over leading axes).
template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b);

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b);  // elementwise, same shape

template <typename S>
TensorT<S> scale(const TensorT<S>& a, S factor);

// [M,K] x [K,N] -> [M,N]
template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b);

// [M,N] -> [N,M], rank 2 only
template <typename S>
TensorT<S> transpose(const TensorT<S>& a);

// Valid cross-correlation with bias.
//   x: [C_in, T] or [B, C_in, T]; k: [C_out, C_in, h]; bias: [C_out]
//   -> [C_out, T-h+1] or [B, C_out, T-h+1]; requires T >= h.
template <typename S>
TensorT<S> conv1d(const TensorT<S>& x, const TensorT<S>& k, const TensorT<S>& bias);

template <typename S>
TensorT<S> activation(const TensorT<S>& x, Act kind);

template <typename S>
TensorT<S> relu(const TensorT<S>& x);
template <typename S>
TensorT<S> tanh(const TensorT<S>& x);
template <typename S>
TensorT<S> sigmoid(const TensorT<S>& x);

// Zero padding on the last axis: [.., T] -> [.., left + T + right]
template <typename S>
TensorT<S> pad_last(const TensorT<S>& x, Extent left, Extent right);

// Windowed max over the last axis; requires T >= window, window/stride >= 1.
// Ties route the gradient to the first maximum.
template <typename S>
TensorT<S> max_pool1d(const TensorT<S>& x, Extent window, Extent stride);

// Max over the entire last axis: [.., C, T] -> [.., C]
template <typename S>
TensorT<S> global_max_pool(const TensorT<S>& x);

// Concatenation along the last (feature) axis; all parts must agree on every
// other axis.
template <typename S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts);

// Row-wise softmax over the last axis with max subtraction for stability.
template <typename S>
TensorT<S> softmax(const TensorT<S>& x);

// Mean negative log-likelihood of the true class.
//   probs: [B, K] rows from softmax; labels: B entries in [0, K).
// Probabilities are clamped to >= 1e-12 before the log.
template <typename S>
TensorT<S> cross_entropy(const TensorT<S>& probs, const std::vector<int>& labels);

// Sum of all elements -> scalar [1].
template <typename S>
TensorT<S> sum(const TensorT<S>& x);

// Same data, new shape; element count must match.
template <typename S>
TensorT<S> reshape(const TensorT<S>& x, Shape shape);

// x: [B, T, H] -> [B, H] at time step t.
template <typename S>
TensorT<S> select_time(const TensorT<S>& x, Extent t);

// steps: T tensors of [B, H] -> [B, T, H]
template <typename S>
TensorT<S> stack_time(const std::vector<TensorT<S>>& steps);

// Row-wise argmax over the last axis (not differentiable; ties -> lowest index).
template <typename S>
std::vector<int> argmax_last(const TensorT<S>& x);

}  // namespace ctc
