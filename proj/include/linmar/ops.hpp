#pragma once

#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "linmar/tape.hpp"
#include "linmar/tensor.hpp"

// Differentiable primitives over Tensor<Scalar>. Each op computes its value
// with Eigen, then (when an input is tracked) records a backward closure on
// the inputs' tape. Backward closures work on detached values only, so the
// reverse sweep never re-records.
//
// Broadcasting is deliberately narrow: per-row scalars (rows_scale/rows_div)
// and per-column row vectors (rowvec_add/rowvec_mul). Nothing else.

namespace linmar {

// Eager NaN/Inf detection after every op. On by default in debug builds;
// tests can force it on in release.
inline std::atomic<bool>& eager_finite_checks() {
#ifdef NDEBUG
  static std::atomic<bool> on{false};
#else
  static std::atomic<bool> on{true};
#endif
  return on;
}

inline void set_eager_finite_checks(bool on) { eager_finite_checks().store(on); }

namespace detail {

template <class S>
Tape<S>* merged_tape(std::initializer_list<const Tensor<S>*> ts) {
  Tape<S>* tp = nullptr;
  for (const Tensor<S>* t : ts) {
    if (!t->tracked()) continue;
    if (tp == nullptr)
      tp = t->tape;
    else if (tp != t->tape)
      throw ContractError("ops: inputs tracked on different tapes");
  }
  return tp;
}

template <class S>
void check_finite(const Tensor<S>& t, const char* op) {
  if (eager_finite_checks().load() && !t.all_finite())
    throw NumericError(std::string(op) + ": produced non-finite values");
}

template <class S>
void require_rank2(const Tensor<S>& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected rank-2, got shape " + shape_str(t.shape));
}

// Per-row scalar argument: accepts {m} or {m,1}.
template <class S>
void require_col(const Tensor<S>& t, Index m, const char* op) {
  bool ok = (t.rank() == 1 && t.shape[0] == m) ||
            (t.rank() == 2 && t.shape[0] == m && t.shape[1] == 1);
  if (!ok)
    throw DimensionError(std::string(op) + ": per-row argument must be [" + std::to_string(m) +
                         "] or [" + std::to_string(m) + "x1], got " + shape_str(t.shape));
}

// Per-column vector argument: accepts {n} or {1,n}.
template <class S>
void require_row(const Tensor<S>& t, Index n, const char* op) {
  bool ok = (t.rank() == 1 && t.shape[0] == n) ||
            (t.rank() == 2 && t.shape[0] == 1 && t.shape[1] == n);
  if (!ok)
    throw DimensionError(std::string(op) + ": per-column argument must be [" + std::to_string(n) +
                         "] or [1x" + std::to_string(n) + "], got " + shape_str(t.shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise / scalar
// ---------------------------------------------------------------------------

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b))
    throw DimensionError("add: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data + b.data;
  detail::check_finite(out, "add");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    out.node = tp->record("add", {ia, ib}, [ia, ib](Tape<S>& t, const Tensor<S>& g) {
      if (ia >= 0) t.accumulate(ia, g);
      if (ib >= 0) t.accumulate(ib, g);
    });
  }
  return out;
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b))
    throw DimensionError("sub: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data - b.data;
  detail::check_finite(out, "sub");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    out.node = tp->record("sub", {ia, ib}, [ia, ib](Tape<S>& t, const Tensor<S>& g) {
      if (ia >= 0) t.accumulate(ia, g);
      if (ib >= 0) {
        Tensor<S> ng = g.detached();
        ng.data = -g.data;
        t.accumulate(ib, ng);
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b))
    throw DimensionError("mul: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data.cwiseProduct(b.data);
  detail::check_finite(out, "mul");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    Tensor<S> av = a.detached(), bv = b.detached();
    out.node = tp->record("mul", {ia, ib}, [ia, ib, av, bv](Tape<S>& t, const Tensor<S>& g) {
      if (ia >= 0) {
        Tensor<S> da = g.detached();
        da.data = g.data.cwiseProduct(bv.data);
        t.accumulate(ia, da);
      }
      if (ib >= 0) {
        Tensor<S> db = g.detached();
        db.data = g.data.cwiseProduct(av.data);
        t.accumulate(ib, db);
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data * c;
  detail::check_finite(out, "scale");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    out.node = tp->record("scale", {ia}, [ia, c](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = g.detached();
      da.data = g.data * c;
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> neg(const Tensor<S>& a) {
  return scale(a, S(-1));
}

template <class S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data.array() + c;
  detail::check_finite(out, "add_scalar");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    out.node = tp->record("add_scalar", {ia},
                          [ia](Tape<S>& t, const Tensor<S>& g) { t.accumulate(ia, g); });
  }
  return out;
}

template <class S>
Tensor<S> relu(const Tensor<S>& a) {
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data.cwiseMax(S(0));
  detail::check_finite(out, "relu");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> av = a.detached();
    out.node = tp->record("relu", {ia}, [ia, av](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = g.detached();
      da.data = (av.data.array() > S(0)).select(g.data, 0);
      t.accumulate(ia, da);
    });
  }
  return out;
}

// elu(x) + 1: x+1 for x > 0, exp(x) otherwise. Strictly positive and C^1,
// which keeps attention normalizers away from zero.
template <class S>
Tensor<S> elu_plus_one(const Tensor<S>& a) {
  Tensor<S> out;
  out.shape = a.shape;
  out.data = (a.data.array() > S(0)).select(a.data.array() + S(1), a.data.array().exp());
  detail::check_finite(out, "elu_plus_one");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> av = a.detached(), ov = out.detached();
    out.node = tp->record("elu_plus_one", {ia}, [ia, av, ov](Tape<S>& t, const Tensor<S>& g) {
      // derivative: 1 for x > 0, exp(x) (= saved output) otherwise
      Tensor<S> da = g.detached();
      da.data = (av.data.array() > S(0)).select(g.data, g.data.cwiseProduct(ov.data));
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> silu(const Tensor<S>& a) {
  Tensor<S> out;
  out.shape = a.shape;
  auto sig = (S(1) / (S(1) + (-a.data.array()).exp())).matrix().eval();
  out.data = a.data.cwiseProduct(sig);
  detail::check_finite(out, "silu");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> av = a.detached();
    Tensor<S> sv;
    sv.shape = a.shape;
    sv.data = sig;
    out.node = tp->record("silu", {ia}, [ia, av, sv](Tape<S>& t, const Tensor<S>& g) {
      // d/dx x*s(x) = s * (1 + x*(1-s))
      Tensor<S> da = g.detached();
      auto s = sv.data.array();
      da.data = g.data.array() * (s * (S(1) + av.data.array() * (S(1) - s)));
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> sqrt_elt(const Tensor<S>& a) {
  if ((a.data.array() < S(0)).any())
    throw NumericError("sqrt_elt: negative input");
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data.array().sqrt();
  detail::check_finite(out, "sqrt_elt");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> ov = out.detached();
    out.node = tp->record("sqrt_elt", {ia}, [ia, ov](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = g.detached();
      da.data = g.data.array() / (S(2) * ov.data.array());
      t.accumulate(ia, da);
    });
  }
  return out;
}

// max(a, c) elementwise; gradient passes only where a > c.
template <class S>
Tensor<S> clamp_min(const Tensor<S>& a, S c) {
  Tensor<S> out;
  out.shape = a.shape;
  out.data = a.data.cwiseMax(c);
  detail::check_finite(out, "clamp_min");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> av = a.detached();
    out.node = tp->record("clamp_min", {ia}, [ia, av, c](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = g.detached();
      da.data = (av.data.array() > c).select(g.data, 0);
      t.accumulate(ia, da);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// matrix products and reductions
// ---------------------------------------------------------------------------

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  if (a.shape[1] != b.shape[0])
    throw DimensionError("matmul: " + shape_str(a.shape) + " * " + shape_str(b.shape));
  Tensor<S> out = Tensor<S>::zeros({a.shape[0], b.shape[1]});
  out.mat_mut() = a.mat() * b.mat();
  detail::check_finite(out, "matmul");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    Tensor<S> av = a.detached(), bv = b.detached();
    out.node = tp->record("matmul", {ia, ib}, [ia, ib, av, bv](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {av.shape[0], bv.shape[1]};
      if (ia >= 0) {
        Tensor<S> da = Tensor<S>::zeros(av.shape);
        da.mat_mut() = gm.mat() * bv.mat().transpose();
        t.accumulate(ia, da);
      }
      if (ib >= 0) {
        Tensor<S> db = Tensor<S>::zeros(bv.shape);
        db.mat_mut() = av.mat().transpose() * gm.mat();
        t.accumulate(ib, db);
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> transpose(const Tensor<S>& a) {
  detail::require_rank2(a, "transpose");
  Tensor<S> out = Tensor<S>::zeros({a.shape[1], a.shape[0]});
  out.mat_mut() = a.mat().transpose();
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("transpose", {ia}, [ia, ash](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {ash[1], ash[0]};
      Tensor<S> da = Tensor<S>::zeros(ash);
      da.mat_mut() = gm.mat().transpose();
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> sum(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::scalar(a.data.sum());
  detail::check_finite(out, "sum");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("sum", {ia}, [ia, ash](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = Tensor<S>::full(ash, g.data[0]);
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> mean(const Tensor<S>& a) {
  if (a.numel() == 0) throw DimensionError("mean: empty tensor");
  Tensor<S> out = Tensor<S>::scalar(a.data.mean());
  detail::check_finite(out, "mean");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    S inv = S(1) / S(a.numel());
    out.node = tp->record("mean", {ia}, [ia, ash, inv](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = Tensor<S>::full(ash, g.data[0] * inv);
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> row_sums(const Tensor<S>& a) {
  detail::require_rank2(a, "row_sums");
  Tensor<S> out = Tensor<S>::zeros({a.shape[0], 1});
  out.data = a.mat().rowwise().sum();
  detail::check_finite(out, "row_sums");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("row_sums", {ia}, [ia, ash](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = Tensor<S>::zeros(ash);
      da.mat_mut() = g.data.replicate(1, ash[1]);
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> col_sums(const Tensor<S>& a) {
  detail::require_rank2(a, "col_sums");
  Tensor<S> out = Tensor<S>::zeros({1, a.shape[1]});
  out.mat_mut() = a.mat().colwise().sum();
  detail::check_finite(out, "col_sums");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("col_sums", {ia}, [ia, ash](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {1, ash[1]};
      Tensor<S> da = Tensor<S>::zeros(ash);
      da.mat_mut() = gm.mat().replicate(ash[0], 1);
      t.accumulate(ia, da);
    });
  }
  return out;
}

// Numerically stable row softmax: shift by the row max, exponentiate,
// normalize. Refuses non-finite input outright in every build mode.
template <class S>
Tensor<S> softmax_rows(const Tensor<S>& a) {
  detail::require_rank2(a, "softmax_rows");
  if (!a.all_finite()) throw NumericError("softmax_rows: non-finite input");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  auto m = a.mat();
  auto o = out.mat_mut();
  for (Index i = 0; i < m.rows(); ++i) {
    S mx = m.row(i).maxCoeff();
    o.row(i) = (m.row(i).array() - mx).exp();
    o.row(i) /= o.row(i).sum();
  }
  detail::check_finite(out, "softmax_rows");
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Tensor<S> yv = out.detached();
    out.node = tp->record("softmax_rows", {ia}, [ia, yv](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = yv.shape;
      Tensor<S> da = Tensor<S>::zeros(yv.shape);
      auto y = yv.mat();
      auto gg = gm.mat();
      auto d = da.mat_mut();
      for (Index i = 0; i < y.rows(); ++i) {
        S dot = gg.row(i).cwiseProduct(y.row(i)).sum();
        d.row(i).array() = y.row(i).array() * (gg.row(i).array() - dot);
      }
      t.accumulate(ia, da);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// row/column broadcasts
// ---------------------------------------------------------------------------

// out[i,j] = a[i,j] * r[i]
template <class S>
Tensor<S> rows_scale(const Tensor<S>& a, const Tensor<S>& r) {
  detail::require_rank2(a, "rows_scale");
  detail::require_col(r, a.shape[0], "rows_scale");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  out.mat_mut() = a.mat().array().colwise() * r.data.array();
  detail::check_finite(out, "rows_scale");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &r})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ir = r.node;
    Tensor<S> av = a.detached(), rv = r.detached();
    out.node = tp->record("rows_scale", {ia, ir}, [ia, ir, av, rv](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = av.shape;
      if (ia >= 0) {
        Tensor<S> da = Tensor<S>::zeros(av.shape);
        da.mat_mut() = gm.mat().array().colwise() * rv.data.array();
        t.accumulate(ia, da);
      }
      if (ir >= 0) {
        Tensor<S> dr = Tensor<S>::zeros(rv.shape);
        dr.data = gm.mat().cwiseProduct(av.mat()).rowwise().sum();
        t.accumulate(ir, dr);
      }
    });
  }
  return out;
}

// out[i,j] = a[i,j] / r[i]
template <class S>
Tensor<S> rows_div(const Tensor<S>& a, const Tensor<S>& r) {
  detail::require_rank2(a, "rows_div");
  detail::require_col(r, a.shape[0], "rows_div");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  out.mat_mut() = a.mat().array().colwise() / r.data.array();
  detail::check_finite(out, "rows_div");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &r})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ir = r.node;
    Tensor<S> rv = r.detached(), ov = out.detached();
    out.node = tp->record("rows_div", {ia, ir}, [ia, ir, rv, ov](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = ov.shape;
      if (ia >= 0) {
        Tensor<S> da = Tensor<S>::zeros(ov.shape);
        da.mat_mut() = gm.mat().array().colwise() / rv.data.array();
        t.accumulate(ia, da);
      }
      if (ir >= 0) {
        // d/dr (a/r) = -a/r^2 = -out/r
        Tensor<S> dr = Tensor<S>::zeros(rv.shape);
        dr.data = -(gm.mat().cwiseProduct(ov.mat()).rowwise().sum().array() / rv.data.array());
        t.accumulate(ir, dr);
      }
    });
  }
  return out;
}

// out[i,j] = a[i,j] + b[j]
template <class S>
Tensor<S> rowvec_add(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_rank2(a, "rowvec_add");
  detail::require_row(b, a.shape[1], "rowvec_add");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  out.mat_mut() = a.mat().array().rowwise() + b.data.transpose().array();
  detail::check_finite(out, "rowvec_add");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    Shape ash = a.shape, bsh = b.shape;
    out.node = tp->record("rowvec_add", {ia, ib}, [ia, ib, ash, bsh](Tape<S>& t, const Tensor<S>& g) {
      if (ia >= 0) t.accumulate(ia, g);
      if (ib >= 0) {
        Tensor<S> gm = g.detached();
        gm.shape = ash;
        Tensor<S> db = Tensor<S>::zeros(bsh);
        db.data = gm.mat().colwise().sum();
        t.accumulate(ib, db);
      }
    });
  }
  return out;
}

// out[i,j] = a[i,j] * b[j]
template <class S>
Tensor<S> rowvec_mul(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_rank2(a, "rowvec_mul");
  detail::require_row(b, a.shape[1], "rowvec_mul");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  out.mat_mut() = a.mat().array().rowwise() * b.data.transpose().array();
  detail::check_finite(out, "rowvec_mul");
  if (Tape<S>* tp = detail::merged_tape<S>({&a, &b})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node, ib = b.node;
    Tensor<S> av = a.detached(), bv = b.detached();
    out.node = tp->record("rowvec_mul", {ia, ib}, [ia, ib, av, bv](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = av.shape;
      if (ia >= 0) {
        Tensor<S> da = Tensor<S>::zeros(av.shape);
        da.mat_mut() = gm.mat().array().rowwise() * bv.data.transpose().array();
        t.accumulate(ia, da);
      }
      if (ib >= 0) {
        Tensor<S> db = Tensor<S>::zeros(bv.shape);
        db.data = gm.mat().cwiseProduct(av.mat()).colwise().sum();
        t.accumulate(ib, db);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// structure: reshape / slice / concat / gather / scatter
// ---------------------------------------------------------------------------

template <class S>
Tensor<S> reshape(const Tensor<S>& a, Shape s) {
  if (shape_numel(s) != a.numel())
    throw DimensionError("reshape: " + shape_str(a.shape) + " -> " + shape_str(s));
  Tensor<S> out;
  out.shape = std::move(s);
  out.data = a.data;
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("reshape", {ia}, [ia, ash](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> da = g.detached();
      da.shape = ash;
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> slice_rows(const Tensor<S>& a, Index start, Index len) {
  detail::require_rank2(a, "slice_rows");
  if (start < 0 || len < 0 || start + len > a.shape[0])
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") of " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros({len, a.shape[1]});
  out.mat_mut() = a.mat().middleRows(start, len);
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("slice_rows", {ia}, [ia, ash, start, len](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {len, ash[1]};
      Tensor<S> da = Tensor<S>::zeros(ash);
      da.mat_mut().middleRows(start, len) = gm.mat();
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> slice_cols(const Tensor<S>& a, Index start, Index len) {
  detail::require_rank2(a, "slice_cols");
  if (start < 0 || len < 0 || start + len > a.shape[1])
    throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") of " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros({a.shape[0], len});
  out.mat_mut() = a.mat().middleCols(start, len);
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("slice_cols", {ia}, [ia, ash, start, len](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {ash[0], len};
      Tensor<S> da = Tensor<S>::zeros(ash);
      da.mat_mut().middleCols(start, len) = gm.mat();
      t.accumulate(ia, da);
    });
  }
  return out;
}

template <class S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  Index n = parts[0].cols(), m = 0;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_rows");
    if (p.shape[1] != n) throw DimensionError("concat_rows: column mismatch");
    m += p.shape[0];
  }
  Tensor<S> out = Tensor<S>::zeros({m, n});
  Index at = 0;
  for (const auto& p : parts) {
    out.mat_mut().middleRows(at, p.shape[0]) = p.mat();
    at += p.shape[0];
  }
  Tape<S>* tp = nullptr;
  for (const auto& p : parts)
    if (p.tracked()) {
      if (tp && tp != p.tape) throw ContractError("ops: inputs tracked on different tapes");
      tp = p.tape;
    }
  if (tp) {
    out.tape = tp;
    out.requires_grad = true;
    std::vector<Index> ids;
    std::vector<Index> row_counts;
    for (const auto& p : parts) {
      ids.push_back(p.node);
      row_counts.push_back(p.shape[0]);
    }
    out.node = tp->record("concat_rows", ids, [ids, row_counts, n](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      Index total = 0;
      for (Index r : row_counts) total += r;
      gm.shape = {total, n};
      Index at = 0;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= 0) {
          Tensor<S> dp = Tensor<S>::zeros({row_counts[i], n});
          dp.mat_mut() = gm.mat().middleRows(at, row_counts[i]);
          t.accumulate(ids[i], dp);
        }
        at += row_counts[i];
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  Index m = parts[0].rows(), n = 0;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_cols");
    if (p.shape[0] != m) throw DimensionError("concat_cols: row mismatch");
    n += p.shape[1];
  }
  Tensor<S> out = Tensor<S>::zeros({m, n});
  Index at = 0;
  for (const auto& p : parts) {
    out.mat_mut().middleCols(at, p.shape[1]) = p.mat();
    at += p.shape[1];
  }
  Tape<S>* tp = nullptr;
  for (const auto& p : parts)
    if (p.tracked()) {
      if (tp && tp != p.tape) throw ContractError("ops: inputs tracked on different tapes");
      tp = p.tape;
    }
  if (tp) {
    out.tape = tp;
    out.requires_grad = true;
    std::vector<Index> ids;
    std::vector<Index> col_counts;
    for (const auto& p : parts) {
      ids.push_back(p.node);
      col_counts.push_back(p.shape[1]);
    }
    out.node = tp->record("concat_cols", ids, [ids, col_counts, m](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      Index total = 0;
      for (Index c : col_counts) total += c;
      gm.shape = {m, total};
      Index at = 0;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= 0) {
          Tensor<S> dp = Tensor<S>::zeros({m, col_counts[i]});
          dp.mat_mut() = gm.mat().middleCols(at, col_counts[i]);
          t.accumulate(ids[i], dp);
        }
        at += col_counts[i];
      }
    });
  }
  return out;
}

// out row i = a row idx[i]; duplicate indices allowed (backward scatter-adds).
template <class S>
Tensor<S> gather_rows(const Tensor<S>& a, const std::vector<Index>& idx) {
  detail::require_rank2(a, "gather_rows");
  for (Index i : idx)
    if (i < 0 || i >= a.shape[0]) throw DimensionError("gather_rows: index out of range");
  Tensor<S> out = Tensor<S>::zeros({static_cast<Index>(idx.size()), a.shape[1]});
  for (size_t r = 0; r < idx.size(); ++r) out.mat_mut().row(r) = a.mat().row(idx[r]);
  if (Tape<S>* tp = detail::merged_tape<S>({&a})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ia = a.node;
    Shape ash = a.shape;
    out.node = tp->record("gather_rows", {ia}, [ia, ash, idx](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = {static_cast<Index>(idx.size()), ash[1]};
      Tensor<S> da = Tensor<S>::zeros(ash);
      for (size_t r = 0; r < idx.size(); ++r) da.mat_mut().row(idx[r]) += gm.mat().row(r);
      t.accumulate(ia, da);
    });
  }
  return out;
}

// Copy of base with row idx[i] replaced by rows' row i. Indices must be unique.
template <class S>
Tensor<S> scatter_rows(const Tensor<S>& base, const std::vector<Index>& idx, const Tensor<S>& rows) {
  detail::require_rank2(base, "scatter_rows");
  detail::require_rank2(rows, "scatter_rows");
  if (rows.shape[0] != static_cast<Index>(idx.size()) || rows.shape[1] != base.shape[1])
    throw DimensionError("scatter_rows: rows " + shape_str(rows.shape) + " vs base " +
                         shape_str(base.shape) + " and " + std::to_string(idx.size()) + " indices");
  std::vector<bool> seen(base.shape[0], false);
  for (Index i : idx) {
    if (i < 0 || i >= base.shape[0]) throw DimensionError("scatter_rows: index out of range");
    if (seen[i]) throw ContractError("scatter_rows: duplicate index");
    seen[i] = true;
  }
  Tensor<S> out;
  out.shape = base.shape;
  out.data = base.data;
  for (size_t r = 0; r < idx.size(); ++r) out.mat_mut().row(idx[r]) = rows.mat().row(r);
  if (Tape<S>* tp = detail::merged_tape<S>({&base, &rows})) {
    out.tape = tp;
    out.requires_grad = true;
    Index ibase = base.node, irows = rows.node;
    Shape bsh = base.shape, rsh = rows.shape;
    out.node = tp->record("scatter_rows", {ibase, irows},
                          [ibase, irows, bsh, rsh, idx](Tape<S>& t, const Tensor<S>& g) {
      Tensor<S> gm = g.detached();
      gm.shape = bsh;
      if (ibase >= 0) {
        Tensor<S> db = gm.detached();
        for (Index i : idx) db.mat_mut().row(i).setZero();
        t.accumulate(ibase, db);
      }
      if (irows >= 0) {
        Tensor<S> dr = Tensor<S>::zeros(rsh);
        for (size_t r = 0; r < idx.size(); ++r) dr.mat_mut().row(r) = gm.mat().row(idx[r]);
        t.accumulate(irows, dr);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// composites
// ---------------------------------------------------------------------------

template <class S>
Tensor<S> mse(const Tensor<S>& pred, const Tensor<S>& target) {
  Tensor<S> d = sub(pred, target);
  return mean(mul(d, d));
}

// x / sqrt(mean(x^2) per row + eps), then a per-feature learned scale.
template <class S>
Tensor<S> rmsnorm(const Tensor<S>& x, const Tensor<S>& gamma, S eps = S(1e-8)) {
  detail::require_rank2(x, "rmsnorm");
  Tensor<S> ms = scale(row_sums(mul(x, x)), S(1) / S(x.shape[1]));
  Tensor<S> denom = sqrt_elt(add_scalar(ms, eps));
  return rowvec_mul(rows_div(x, denom), gamma);
}

// x @ w + b with b broadcast over rows.
template <class S>
Tensor<S> linear_layer(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  return rowvec_add(matmul(x, w), b);
}

}  // namespace linmar
