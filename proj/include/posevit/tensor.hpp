#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posevit/error.hpp"
#include "posevit/rng.hpp"

namespace posevit {

using Scalar = double;
using ArrayX = Eigen::ArrayXd;
using MatrixRM =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Shape = std::vector<Index>;

// Product of extents; every extent must be positive. An empty shape is a
// scalar of size 1.
Index shape_size(const Shape& shape);

// Dense double-precision tensor with row-major flat storage. Tensor is a
// cheap shared handle: copies alias one node, and gradient buffers live on
// the node so accumulation is visible through every handle. Values must stay
// finite; the factories and every op enforce it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from_array(Shape shape, ArrayX values, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<Scalar> values,
                            bool requires_grad = false);
  static Tensor scalar(Scalar value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  Index rank() const { return static_cast<Index>(shape().size()); }
  Index size() const;
  bool is_scalar() const { return defined() && size() == 1; }

  // Rank-2 accessors.
  Index rows() const;
  Index cols() const;

  ArrayX& values() const;
  Scalar value() const;  // scalar tensors only

  bool requires_grad() const;
  void set_requires_grad(bool requires_grad) const;

  bool has_grad() const;
  ArrayX& grad() const;         // throws unless allocated
  ArrayX& ensure_grad() const;  // allocates zeros on first use
  void zero_grad() const;
  void add_grad(const ArrayX& delta) const;

  // Deep copy: fresh node, same values, no gradient buffer.
  Tensor clone() const;

  const void* node_id() const { return node_.get(); }

 private:
  struct Node {
    Shape shape;
    ArrayX values;
    ArrayX grad;  // size 0 until ensure_grad()
    bool requires_grad = false;
  };

  std::shared_ptr<Node> node_;
};

// Ordered record of executed differentiable ops. backward() seeds d(loss)=1
// and replays the records in exact reverse execution order; each record pulls
// the output gradient into its inputs additively, so fan-out accumulates.
// A tape is single-threaded; independent tapes may run on distinct threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Appends an executed op. `pull` must read output.grad() and add each
  // input's contribution via add_grad/ensure_grad.
  void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> pull);

  // Requires a scalar loss produced on this tape.
  void backward(const Tensor& loss);

  std::size_t num_ops() const { return records_.size(); }

 private:
  struct Record {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> pull;
  };
  std::vector<Record> records_;
};

// --- differentiable ops (free functions recording onto the tape) ---

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
// rows of `m` plus rank-1 `row_values` (bias broadcast over rows).
Tensor add_rowvec(Tape& tape, const Tensor& m, const Tensor& row_values);
Tensor scale(Tape& tape, const Tensor& a, Scalar factor);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor row(Tape& tape, const Tensor& a, Index r);          // [1 x cols] view copy
Tensor slice_cols(Tape& tape, const Tensor& a, Index first, Index count);
Tensor concat_cols(Tape& tape, std::span<const Tensor> parts);
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
Tensor as_row(Tape& tape, const Tensor& v);  // rank-1 [n] -> [1 x n]
Tensor sum(Tape& tape, const Tensor& a);     // full reduction to a scalar

// Max-subtracted exponentials normalized along the last axis; each slice
// sums to 1 within 1e-9 and every entry lies in (0, 1].
Tensor softmax(Tape& tape, const Tensor& a);

// Exact x * Phi(x) with the Gaussian CDF (erf form, not the tanh fit).
Tensor gelu(Tape& tape, const Tensor& a);

// Normalizes each slice along the last axis with population variance, then
// applies elementwise gain and bias (both rank-1 of the slice width).
Tensor layernorm(Tape& tape, const Tensor& x, const Tensor& gain,
                 const Tensor& bias, Scalar epsilon = 1e-5);

// Inverted dropout: keeps an element with probability 1-rate and scales
// survivors by 1/(1-rate) so the expectation is preserved. Identity when
// training is false or rate is 0. rate must lie in [0, 1).
Tensor dropout(Tape& tape, const Tensor& a, Scalar rate, bool training,
               SplitMix64& rng);

// Mean over the batch of -log(p[true]), clamping probabilities at 1e-12
// before the log. Rows of `probabilities` must each sum to 1 within 1e-6 and
// `one_hot_targets` must be exactly one-hot.
Tensor cross_entropy(Tape& tape, const Tensor& probabilities,
                     const Tensor& one_hot_targets);

// Numerically fused softmax followed by cross_entropy; the backward rule
// writes (p - t) / batch straight to the logits.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const Tensor& one_hot_targets);

// --- gradient verification ---

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double step = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> entries;
  double worst() const;
};

// Compares analytic gradients of `scalar_fn` against central differences for
// every element of every named parameter. `scalar_fn` must rebuild the graph
// on the given tape from the parameters' current values and be deterministic
// (no dropout). Relative error uses max(|analytic|, |numeric|, 1e-5) as the
// denominator so near-zero gradients are judged on an absolute floor.
GradCheckReport finite_diff_check(
    const std::function<Tensor(Tape&)>& scalar_fn,
    const std::vector<std::pair<std::string, Tensor>>& params, double h = 1e-5,
    double tol = 1e-4);

}  // namespace posevit
