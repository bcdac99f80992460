#pragma once

#include <cstdint>

#include "linmar/attention.hpp"
#include "linmar/locality.hpp"

// Plain-loop attention kernels with a scalar multiply-accumulate counter,
// used to cross-check the analytical cost model on small inputs. The counter
// increments once per MAC actually executed inside the dominant contractions:
//
//   softmax:      score matrix Q K^T and the weighted sum A V
//   linearized:   memory build phi(K)^T V and readout phi(Q) M
//   depthwise:    every tap of the padded convolution (zero taps included)
//
// Kernel evaluations, softmax exponentials, score scaling, the O(d)-per-token
// normalizer work and the final division are excluded, mirroring the cost
// model's accounting convention, which keeps only the dominant terms.
//
// These kernels also return their outputs so callers can confirm they agree
// with the Eigen-backed implementations.

namespace linmar::counted {

void reset_macs();
std::int64_t macs();

Tensord softmax_attention(const Tensord& q, const Tensord& k, const Tensord& v);
Tensord div_linear(const Tensord& q, const Tensord& k, const Tensord& v, const AttentionConfig& cfg);
Tensord sub_linear(const Tensord& q, const Tensord& k, const Tensord& v, const AttentionConfig& cfg);
Tensord depthwise_conv2d(const Tensord& x, const TokenLayout& layout, const DwcKernel<double>& kern);

}  // namespace linmar::counted
