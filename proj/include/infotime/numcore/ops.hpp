#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infotime/numcore/tensor.hpp"

namespace infotime::numcore {

// Primitive set. Every op validates shapes, checks its output for NaN/Inf,
// and records a backward node on the active tape when any input needs a
// gradient. Unless stated otherwise tensors are treated as [rows x cols]
// matrices; elementwise ops accept any rank.

/// a + b. Shapes must match, or b may be a scalar, or (for bias adds) a
/// rank-1 [N] added to every row of a rank-2 [M x N].
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product; b may be a scalar tensor.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
/// Clamp to [lo, hi]; subgradient 0 outside the interval.
Tensor clamp(const Tensor& a, double lo, double hi);

/// Row-wise affine helpers for per-sample denormalization:
/// scale_rows multiplies row r of a [R x C] by s[r]; shift_rows adds s[r].
Tensor scale_rows(const Tensor& a, const Tensor& s);
Tensor shift_rows(const Tensor& a, const Tensor& s);

/// [M x K] x [K x N] -> [M x N]. Gradients dA = dC.B^T, dB = A^T.dC.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Concatenate rank-2 tensors with equal row counts along the last axis.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Columns [start, start+len) of a rank-2 tensor.
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
/// Columns start, start+stride, start+2*stride, ... of a rank-2 tensor.
Tensor slice_cols_strided(const Tensor& a, std::size_t start, std::size_t stride);
/// Structural inverse of slicing every stride-th column: parts[j] supplies
/// columns j, j+m, j+2m, ... of the result (m = parts.size()).
Tensor interleave_cols(std::span<const Tensor> parts);

/// Select rows by index (duplicates allowed); backward scatter-adds.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

/// Per-element log N(x; mean, exp(logvar)):
///   -0.5 * ((x-mean)^2 * exp(-logvar) + logvar + log(2*pi)).
/// mean/logvar must match x's shape or be scalars. Differentiable in all
/// three arguments.
Tensor gaussian_log_density(const Tensor& x, const Tensor& mean, const Tensor& logvar);

/// Mean squared error as a differentiable scalar: mean((a-b)^2).
Tensor mse_loss(const Tensor& a, const Tensor& b);

} // namespace infotime::numcore
