#pragma once

#include "nanosr/graph.hpp"

namespace nanosr::reparam {

// Zero-pads a 1x1 kernel into the center of a 3x3 one (padding becomes 1 so
// the output geometry is unchanged). 3x3 kernels pass through untouched.
ConvParams embed_to_3x3(const ConvParams& p);

// Sums parallel branches with identical geometry into one convolution.
ConvParams fuse_parallel(const std::vector<ConvParams>& branches);

// Collapses a 1x1 conv followed by a k x k conv into a single k x k conv:
//   W'[o,i] = sum_m W2[o,m] * W1[m,i]
//   b'[o]   = b2[o] + sum_m b1[m] * sum_uv W2[o,m,u,v]
// Exact everywhere given the block convention that the intermediate border
// carries the 1x1 bias (the 1x1 stage runs with padding 1).
ConvParams fuse_sequential(const ConvParams& first_1x1, const ConvParams& second_kxk);

// embed -> fuse_sequential per branch -> fuse_parallel; one 3x3 conv out.
ConvParams fuse_block(const BranchBlock& block);

// Replaces every branch-block node with its fused convolution. Idempotent;
// parameter count never increases.
ModelGraph fuse_model(const ModelGraph& g);

}  // namespace nanosr::reparam
