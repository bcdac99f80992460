#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "linmar/ops.hpp"

// Depthwise 2-D convolution over the image-token grid, and its fusion with an
// attention output: conv runs on image-token features only, its result is
// added to the attention output's image rows before the output projection.
// Query rows pass through untouched.

namespace linmar {

// Sequence layout: n_query query tokens followed by grid_h * grid_w image
// tokens, image tokens in row-major grid order.
struct TokenLayout {
  Index n_query = 0;
  Index grid_h = 0;
  Index grid_w = 0;

  Index n_image() const { return grid_h * grid_w; }
  Index n_total() const { return n_query + n_image(); }

  void validate() const {
    if (n_query < 0) throw ContractError("TokenLayout: negative n_query");
    if (grid_h < 1 || grid_w < 1) throw ContractError("TokenLayout: empty grid");
  }
};

// Per-channel k x k taps plus a per-channel bias. The bias ships with the
// module but stays out of the headline parameter formula (see
// dwc_param_count).
template <class S>
struct DwcKernel {
  Index size = 0;      // k, odd
  Tensor<S> weights;   // {D, k, k}
  Tensor<S> bias;      // {D}

  void validate(Index channels) const {
    if (size < 1 || size % 2 == 0)
      throw ContractError("DwcKernel: size must be odd and positive, got " + std::to_string(size));
    if (weights.shape != Shape{channels, size, size})
      throw DimensionError("DwcKernel: weights " + shape_str(weights.shape) + ", expected " +
                           shape_str({channels, size, size}));
    if (bias.shape != Shape{channels})
      throw DimensionError("DwcKernel: bias " + shape_str(bias.shape) + ", expected [" +
                           std::to_string(channels) + "]");
  }

  // Center tap 1, everything else 0: exact identity on any input.
  static DwcKernel delta(Index channels, Index k) {
    DwcKernel d;
    d.size = k;
    d.weights = Tensor<S>::zeros({channels, k, k});
    d.bias = Tensor<S>::zeros({channels});
    Index c0 = (k / 2) * k + (k / 2);
    for (Index c = 0; c < channels; ++c) d.weights.data[c * k * k + c0] = S(1);
    return d;
  }

  static DwcKernel zero(Index channels, Index k) {
    DwcKernel d;
    d.size = k;
    d.weights = Tensor<S>::zeros({channels, k, k});
    d.bias = Tensor<S>::zeros({channels});
    return d;
  }

  // Mild near-identity start: center tap 1/k^2, other taps small uniform
  // noise, zero bias. Keeps early training close to the conv-free baseline.
  static DwcKernel near_identity(Index channels, Index k, std::mt19937_64& rng) {
    DwcKernel d = zero(channels, k);
    std::uniform_real_distribution<double> u(-0.01 / double(k * k), 0.01 / double(k * k));
    for (Index i = 0; i < d.weights.numel(); ++i) d.weights.data[i] = S(u(rng));
    Index c0 = (k / 2) * k + (k / 2);
    for (Index c = 0; c < channels; ++c) d.weights.data[c * k * k + c0] = S(1) / S(k * k);
    return d;
  }
};

// Depthwise conv, stride 1, zero padding (k-1)/2, so the grid shape is
// preserved. Hand-rolled loops with a hand-written backward; gradient-checked
// against finite differences. x is {n_image, D} in row-major grid order.
template <class S>
Tensor<S> depthwise_conv2d(const Tensor<S>& x, const TokenLayout& layout, const DwcKernel<S>& kern) {
  layout.validate();
  detail::require_rank2(x, "depthwise_conv2d");
  if (x.shape[0] != layout.n_image())
    throw DimensionError("depthwise_conv2d: " + std::to_string(x.shape[0]) + " rows for a " +
                         std::to_string(layout.grid_h) + "x" + std::to_string(layout.grid_w) + " grid");
  const Index channels = x.shape[1];
  kern.validate(channels);
  const Index k = kern.size, pad = (k - 1) / 2;
  const Index gh = layout.grid_h, gw = layout.grid_w;

  Tensor<S> out = Tensor<S>::zeros(x.shape);
  for (Index c = 0; c < channels; ++c) {
    for (Index y = 0; y < gh; ++y) {
      for (Index xx = 0; xx < gw; ++xx) {
        S acc = kern.bias.data[c];
        for (Index ky = 0; ky < k; ++ky) {
          Index iy = y + ky - pad;
          if (iy < 0 || iy >= gh) continue;
          for (Index kx = 0; kx < k; ++kx) {
            Index ix = xx + kx - pad;
            if (ix < 0 || ix >= gw) continue;
            acc += kern.weights.data[(c * k + ky) * k + kx] * x.data[(iy * gw + ix) * channels + c];
          }
        }
        out.data[(y * gw + xx) * channels + c] = acc;
      }
    }
  }
  detail::check_finite(out, "depthwise_conv2d");

  if (Tape<S>* tp = detail::merged_tape<S>({&x, &kern.weights, &kern.bias})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ix_node = x.node, iw = kern.weights.node, ib = kern.bias.node;
    Tensor<S> xv = x.detached(), wv = kern.weights.detached();
    out.node = tp->record(
        "depthwise_conv2d", {ix_node, iw, ib},
        [ix_node, iw, ib, xv, wv, gh, gw, k, pad, channels](Tape<S>& t, const Tensor<S>& g) {
          Tensor<S> dx = Tensor<S>::zeros(xv.shape);
          Tensor<S> dw = Tensor<S>::zeros(wv.shape);
          Tensor<S> db = Tensor<S>::zeros({channels});
          for (Index c = 0; c < channels; ++c) {
            for (Index y = 0; y < gh; ++y) {
              for (Index xx = 0; xx < gw; ++xx) {
                S go = g.data[(y * gw + xx) * channels + c];
                db.data[c] += go;
                for (Index ky = 0; ky < k; ++ky) {
                  Index iy = y + ky - pad;
                  if (iy < 0 || iy >= gh) continue;
                  for (Index kx = 0; kx < k; ++kx) {
                    Index ix = xx + kx - pad;
                    if (ix < 0 || ix >= gw) continue;
                    Index xi = (iy * gw + ix) * channels + c;
                    Index wi = (c * k + ky) * k + kx;
                    dx.data[xi] += wv.data[wi] * go;
                    dw.data[wi] += xv.data[xi] * go;
                  }
                }
              }
            }
          }
          if (ix_node >= 0) t.accumulate(ix_node, dx);
          if (iw >= 0) t.accumulate(iw, dw);
          if (ib >= 0) t.accumulate(ib, db);
        });
  }
  return out;
}

// attn_out {n_total, D} + dwc_out {n_image, D} on the image rows; query rows
// are copied through bit-for-bit.
template <class S>
Tensor<S> fuse_locality(const Tensor<S>& attn_out, const Tensor<S>& dwc_out, const TokenLayout& layout) {
  layout.validate();
  detail::require_rank2(attn_out, "fuse_locality");
  detail::require_rank2(dwc_out, "fuse_locality");
  if (attn_out.shape[0] != layout.n_total())
    throw DimensionError("fuse_locality: attention rows " + std::to_string(attn_out.shape[0]) +
                         " vs layout total " + std::to_string(layout.n_total()));
  if (dwc_out.shape[0] != layout.n_image() || dwc_out.shape[1] != attn_out.shape[1])
    throw DimensionError("fuse_locality: conv output " + shape_str(dwc_out.shape) + " vs " +
                         shape_str({layout.n_image(), attn_out.shape[1]}));
  if (layout.n_query == 0) return add(attn_out, dwc_out);
  Tensor<S> queries = slice_rows(attn_out, 0, layout.n_query);
  Tensor<S> image = slice_rows(attn_out, layout.n_query, layout.n_image());
  return concat_rows<S>({queries, add(image, dwc_out)});
}

// Taps only; the per-channel bias is module plumbing and stays out of the
// headline count. Ask for it explicitly via with_bias.
inline std::int64_t dwc_param_count(std::int64_t k, std::int64_t channels, std::int64_t n_decoder_layers,
                                    bool with_bias = false) {
  if (k < 1 || k % 2 == 0 || channels < 1 || n_decoder_layers < 0)
    throw ContractError("dwc_param_count: bad arguments");
  std::int64_t per_layer = k * k * channels + (with_bias ? channels : 0);
  return per_layer * n_decoder_layers;
}

}  // namespace linmar
