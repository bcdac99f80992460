#include "linmar/instrumented.hpp"

#include <cmath>
#include <vector>

namespace linmar::counted {

namespace {

thread_local std::int64_t g_macs = 0;

double apply_kernel_scalar(double x, Kernel k) {
  switch (k) {
    case Kernel::relu: return x > 0.0 ? x : 0.0;
    case Kernel::elu_plus_one: return x > 0.0 ? x + 1.0 : std::exp(x);
    case Kernel::identity: return x;
  }
  throw ContractError("counted: bad kernel");
}

Tensord apply_kernel(const Tensord& x, Kernel k) {
  Tensord out = Tensord::zeros(x.shape);
  for (Index i = 0; i < x.numel(); ++i) out.data[i] = apply_kernel_scalar(x.data[i], k);
  return out;
}

}  // namespace

void reset_macs() { g_macs = 0; }
std::int64_t macs() { return g_macs; }

Tensord softmax_attention(const Tensord& q, const Tensord& k, const Tensord& v) {
  const Index n = q.shape[0], d = q.shape[1], dv = v.shape[1];
  const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

  // scores: n x n, counting each scalar MAC of Q K^T
  std::vector<double> scores(n * n, 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index r = 0; r < d; ++r) {
        acc += q.at(i, r) * k.at(j, r);
        ++g_macs;
      }
      scores[i * n + j] = acc * inv_sqrt_d;  // scaling not counted
    }

  // row softmax (no MACs)
  for (Index i = 0; i < n; ++i) {
    double mx = scores[i * n];
    for (Index j = 1; j < n; ++j) mx = std::max(mx, scores[i * n + j]);
    double sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      scores[i * n + j] = std::exp(scores[i * n + j] - mx);
      sum += scores[i * n + j];
    }
    for (Index j = 0; j < n; ++j) scores[i * n + j] /= sum;
  }

  // weighted sum A V
  Tensord out = Tensord::zeros({n, dv});
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) {
        acc += scores[i * n + j] * v.at(j, c);
        ++g_macs;
      }
      out.at(i, c) = acc;
    }
  return out;
}

Tensord div_linear(const Tensord& q, const Tensord& k, const Tensord& v, const AttentionConfig& cfg) {
  const Index n = q.shape[0], d = q.shape[1], dv = v.shape[1];
  Tensord phi_q = apply_kernel(q, cfg.kernel);
  Tensord phi_k = apply_kernel(k, cfg.kernel);

  // memory M = sum_j phi(K_j)^T V_j and normalizer z = sum_j phi(K_j)^T
  std::vector<double> m(d * dv, 0.0), z(d, 0.0);
  for (Index j = 0; j < n; ++j) {
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < dv; ++c) {
        m[r * dv + c] += phi_k.at(j, r) * v.at(j, c);
        ++g_macs;
      }
      z[r] += phi_k.at(j, r);  // additive only
    }
  }

  // readout phi(Q) M, then the (uncounted) normalizer dot and division
  Tensord out = Tensord::zeros({n, dv});
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (Index r = 0; r < d; ++r) {
        acc += phi_q.at(i, r) * m[r * dv + c];
        ++g_macs;
      }
      out.at(i, c) = acc;
    }
    double den = 0.0;
    for (Index r = 0; r < d; ++r) den += phi_q.at(i, r) * z[r];
    den = std::max(den, cfg.epsilon);
    for (Index c = 0; c < dv; ++c) out.at(i, c) /= den;
  }
  return out;
}

Tensord sub_linear(const Tensord& q, const Tensord& k, const Tensord& v, const AttentionConfig& cfg) {
  const Index n = q.shape[0], d = q.shape[1], dv = v.shape[1];
  const double inv_n = 1.0 / double(n);
  Tensord phi_q = apply_kernel(q, cfg.kernel);
  Tensord phi_k = apply_kernel(k, cfg.kernel);

  std::vector<double> mbar(d * dv, 0.0), zbar(d, 0.0), vbar(dv, 0.0);
  for (Index j = 0; j < n; ++j) {
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < dv; ++c) {
        mbar[r * dv + c] += phi_k.at(j, r) * v.at(j, c);
        ++g_macs;
      }
      zbar[r] += phi_k.at(j, r);
    }
    for (Index c = 0; c < dv; ++c) vbar[c] += v.at(j, c);
  }
  for (auto& x : mbar) x *= inv_n;
  for (auto& x : zbar) x *= inv_n;
  for (auto& x : vbar) x *= inv_n;

  Tensord out = Tensord::zeros({n, dv});
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (Index r = 0; r < d; ++r) {
        acc += phi_q.at(i, r) * mbar[r * dv + c];
        ++g_macs;
      }
      out.at(i, c) = acc;
    }
    double s = 0.0;
    for (Index r = 0; r < d; ++r) s += phi_q.at(i, r) * zbar[r];  // O(d), uncounted
    double coef = s - 1.0;
    for (Index c = 0; c < dv; ++c) out.at(i, c) -= coef * vbar[c];  // rank-1, uncounted
  }
  return out;
}

Tensord depthwise_conv2d(const Tensord& x, const TokenLayout& layout, const DwcKernel<double>& kern) {
  layout.validate();
  kern.validate(x.shape[1]);
  const Index channels = x.shape[1], k = kern.size, pad = (k - 1) / 2;
  const Index gh = layout.grid_h, gw = layout.grid_w;
  Tensord out = Tensord::zeros(x.shape);
  for (Index c = 0; c < channels; ++c)
    for (Index y = 0; y < gh; ++y)
      for (Index xx = 0; xx < gw; ++xx) {
        double acc = kern.bias.data[c];
        for (Index ky = 0; ky < k; ++ky)
          for (Index kx = 0; kx < k; ++kx) {
            Index iy = y + ky - pad, ix = xx + kx - pad;
            // zero padding: out-of-grid taps read 0 but still execute
            double in = (iy < 0 || iy >= gh || ix < 0 || ix >= gw)
                            ? 0.0
                            : x.data[(iy * gw + ix) * channels + c];
            acc += kern.weights.data[(c * k + ky) * k + kx] * in;
            ++g_macs;
          }
        out.data[(y * gw + xx) * channels + c] = acc;
      }
  return out;
}

}  // namespace linmar::counted
