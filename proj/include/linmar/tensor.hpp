#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "linmar/errors.hpp"

namespace linmar {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <class Scalar>
class Tape;

inline Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) {
    if (d < 0) throw DimensionError("shape: negative dimension");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

// Dense n-d array over a flat row-major buffer. Small value type: copies are
// cheap at the scales this library targets and keep op semantics functional.
// A tensor may be tracked on a Tape (tape + node set), in which case ops that
// consume it record backward closures; plain tensors flow through untouched.
template <class Scalar>
struct Tensor {
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapType = Eigen::Map<MatrixType>;
  using ConstMapType = Eigen::Map<const MatrixType>;

  Shape shape;
  Storage data;
  bool requires_grad = false;
  Tape<Scalar>* tape = nullptr;
  Index node = -1;

  Tensor() = default;

  static Tensor zeros(Shape s) {
    Tensor t;
    t.shape = std::move(s);
    t.data = Storage::Zero(shape_numel(t.shape));
    return t;
  }

  static Tensor ones(Shape s) { return full(std::move(s), Scalar(1)); }

  static Tensor full(Shape s, Scalar v) {
    Tensor t;
    t.shape = std::move(s);
    t.data = Storage::Constant(shape_numel(t.shape), v);
    return t;
  }

  static Tensor scalar(Scalar v) { return full({1}, v); }

  static Tensor from_vector(Shape s, const std::vector<Scalar>& values) {
    Tensor t;
    t.shape = std::move(s);
    if (static_cast<Index>(values.size()) != shape_numel(t.shape))
      throw DimensionError("from_vector: " + std::to_string(values.size()) +
                           " values for shape " + shape_str(t.shape));
    t.data = Eigen::Map<const Storage>(values.data(), values.size());
    return t;
  }

  static Tensor from_list(Shape s, std::initializer_list<Scalar> values) {
    return from_vector(std::move(s), std::vector<Scalar>(values));
  }

  Index numel() const { return data.size(); }
  Index rank() const { return static_cast<Index>(shape.size()); }

  bool tracked() const { return tape != nullptr && node >= 0; }

  Index rows() const {
    if (rank() == 1) return shape[0];
    if (rank() == 2) return shape[0];
    throw DimensionError("rows: rank-" + std::to_string(rank()) + " tensor");
  }

  Index cols() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape[1];
    throw DimensionError("cols: rank-" + std::to_string(rank()) + " tensor");
  }

  // Rank-1 and rank-2 tensors view as a column-vector / row-major matrix.
  ConstMapType mat() const { return ConstMapType(data.data(), rows(), cols()); }
  MapType mat_mut() { return MapType(data.data(), rows(), cols()); }

  Scalar value() const {
    if (numel() != 1) throw DimensionError("value: tensor is not a scalar");
    return data[0];
  }

  Scalar& at(Index i) { return data[i]; }
  Scalar at(Index i) const { return data[i]; }

  Scalar& at(Index r, Index c) {
    if (rank() != 2) throw DimensionError("at(r,c): tensor is not rank-2");
    return data[r * shape[1] + c];
  }
  Scalar at(Index r, Index c) const {
    return const_cast<Tensor*>(this)->at(r, c);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const { return data.allFinite(); }

  // Value copy with tracking stripped; what backward closures capture.
  Tensor detached() const {
    Tensor t;
    t.shape = shape;
    t.data = data;
    return t;
  }
};

using Tensord = Tensor<double>;
using Tensorf = Tensor<float>;

}  // namespace linmar
