#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddavs/nd/tape.hpp"

// Differentiable primitives. Every function records exactly one node on the
// tape of its operands.
namespace ddavs::nd {

Var matmul(Var a, Var b);
/// a * b^T without materialising the transpose.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
/// x[m x n] + b[n] broadcast over rows.
Var add_row(Var x, Var b);

Var relu(Var x);
/// tanh approximation of GELU.
Var gelu(Var x);
Var sigmoid(Var x);
Var log(Var x);
Var exp(Var x);
/// Elementwise x^e for x >= 0.
Var pow_scalar(Var x, double e);

Var sum(Var x);
Var mean(Var x);
/// Column means of an m x n array, as a 1 x n row.
Var mean_rows(Var x);

/// Row-wise softmax, computed with max subtraction.
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// x_i / max(||x_i||_2, floor) per row.
Var normalize_rows(Var x, double floor = 1e-12);

Var reshape(Var x, Shape shape);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);

/// Tokens laid out as an (h*w) x c grid, resized to (out_h*out_w) x c with
/// half-pixel-centre bilinear interpolation.
Var upsample_bilinear(Var x, std::size_t h, std::size_t w, std::size_t out_h,
                      std::size_t out_w);
/// Groups each f x f block of an (h*w) x c token grid into one token of
/// width c*f*f. Blocks overhanging the border are zero padded.
Var space_to_depth(Var x, std::size_t h, std::size_t w, std::size_t f);

/// softmax_rows(q k^T / sqrt(d)) v, returning the weights through `weights`.
Var scaled_dot_attention(Var q, Var k, Var v, Var* weights = nullptr);

}  // namespace ddavs::nd
