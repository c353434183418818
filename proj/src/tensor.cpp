#include "posevit/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace posevit {

namespace {

using RowArr = Eigen::Array<Scalar, 1, Eigen::Dynamic>;

constexpr Scalar kProbabilityClamp = 1e-12;
constexpr Scalar kInvSqrt2Pi = 0.39894228040143267794;

void check_finite(const ArrayX& values, const char* what) {
  if (!values.allFinite()) {
    throw ContractError(std::string(what) + ": non-finite values");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw ContractError(message);
}

// Views a tensor of any rank as [slices x last-extent].
std::pair<Index, Index> last_axis_view(const Tensor& t) {
  require(t.rank() >= 1, "op: rank >= 1 tensor required");
  const Index last = t.shape().back();
  return {t.size() / last, last};
}

Eigen::Map<const MatrixRM> map2(const Tensor& t, Index rows, Index cols) {
  return {t.values().data(), rows, cols};
}

Eigen::Map<MatrixRM> map2_grad(const Tensor& t, Index rows, Index cols) {
  t.ensure_grad();
  return {t.grad().data(), rows, cols};
}

void check_one_hot(const Tensor& targets) {
  const Index batch = targets.rows();
  const Index classes = targets.cols();
  for (Index b = 0; b < batch; ++b) {
    int ones = 0;
    for (Index j = 0; j < classes; ++j) {
      const Scalar v = targets.values()(b * classes + j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw ContractError("cross_entropy: target entries must be exactly 0 or 1");
      }
    }
    if (ones != 1) {
      throw ContractError("cross_entropy: each target row must be one-hot");
    }
  }
}

Index one_hot_index(const Tensor& targets, Index row) {
  const Index classes = targets.cols();
  for (Index j = 0; j < classes; ++j) {
    if (targets.values()(row * classes + j) == 1.0) return j;
  }
  throw ContractError("cross_entropy: each target row must be one-hot");
}

// Row-wise stable softmax of a [rows x cols] buffer.
ArrayX stable_softmax(const ArrayX& values, Index rows, Index cols) {
  ArrayX out(rows * cols);
  Eigen::Map<const MatrixRM> x(values.data(), rows, cols);
  Eigen::Map<MatrixRM> y(out.data(), rows, cols);
  const Eigen::VectorXd rowmax = x.rowwise().maxCoeff();
  y = x.colwise() - rowmax;
  y.array() = y.array().exp();
  const ArrayX sums = y.array().rowwise().sum();
  y.array().colwise() /= sums;
  return out;
}

}  // namespace

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (const Index extent : shape) {
    if (extent <= 0) throw ContractError("tensor: extents must be positive");
    n *= extent;
  }
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const Index n = shape_size(shape);
  return from_array(std::move(shape), ArrayX::Zero(n), requires_grad);
}

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  const Index n = shape_size(shape);
  return from_array(std::move(shape), ArrayX::Constant(n, value), requires_grad);
}

Tensor Tensor::from_array(Shape shape, ArrayX values, bool requires_grad) {
  const Index n = shape_size(shape);
  if (values.size() != n) {
    throw ContractError("tensor: value count does not match shape");
  }
  check_finite(values, "tensor");
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = std::move(shape);
  t.node_->values = std::move(values);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<Scalar> values, bool requires_grad) {
  ArrayX arr(static_cast<Index>(values.size()));
  std::copy(values.begin(), values.end(), arr.data());
  return from_array(std::move(shape), std::move(arr), requires_grad);
}

Tensor Tensor::scalar(Scalar value) { return from_array({}, ArrayX::Constant(1, value)); }

const Shape& Tensor::shape() const {
  require(defined(), "tensor: undefined handle");
  return node_->shape;
}

Index Tensor::size() const {
  require(defined(), "tensor: undefined handle");
  return node_->values.size();
}

Index Tensor::rows() const {
  require(rank() == 2, "tensor: rows() needs a rank-2 tensor");
  return shape()[0];
}

Index Tensor::cols() const {
  require(rank() == 2, "tensor: cols() needs a rank-2 tensor");
  return shape()[1];
}

ArrayX& Tensor::values() const {
  require(defined(), "tensor: undefined handle");
  return node_->values;
}

Scalar Tensor::value() const {
  require(is_scalar(), "tensor: value() needs a scalar tensor");
  return node_->values(0);
}

bool Tensor::requires_grad() const {
  require(defined(), "tensor: undefined handle");
  return node_->requires_grad;
}

void Tensor::set_requires_grad(bool requires_grad) const {
  require(defined(), "tensor: undefined handle");
  node_->requires_grad = requires_grad;
}

bool Tensor::has_grad() const { return defined() && node_->grad.size() != 0; }

ArrayX& Tensor::grad() const {
  require(has_grad(), "tensor: gradient not allocated");
  return node_->grad;
}

ArrayX& Tensor::ensure_grad() const {
  require(defined(), "tensor: undefined handle");
  if (node_->grad.size() == 0) node_->grad = ArrayX::Zero(node_->values.size());
  return node_->grad;
}

void Tensor::zero_grad() const { ensure_grad().setZero(); }

void Tensor::add_grad(const ArrayX& delta) const {
  require(delta.size() == size(), "tensor: gradient shape mismatch");
  ensure_grad() += delta;
}

Tensor Tensor::clone() const {
  require(defined(), "tensor: undefined handle");
  return from_array(node_->shape, node_->values, node_->requires_grad);
}

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> pull) {
  require(output.defined(), "tape: undefined output");
  records_.push_back({std::move(inputs), std::move(output), std::move(pull)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar tensor");
  }
  bool on_tape = false;
  for (const Record& r : records_) {
    if (r.output.node_id() == loss.node_id()) {
      on_tape = true;
      break;
    }
  }
  if (!on_tape) {
    throw ContractError("backward: loss was not produced on this tape");
  }
  loss.ensure_grad()(0) += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output.has_grad()) it->pull();
  }
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 tensors required");
  require(a.cols() == b.rows(), "matmul: inner extents disagree");
  const Index m = a.rows(), k = a.cols(), n = b.cols();
  ArrayX out(m * n);
  Eigen::Map<MatrixRM>(out.data(), m, n).noalias() = map2(a, m, k) * map2(b, k, n);
  Tensor y = Tensor::from_array({m, n}, std::move(out),
                                a.requires_grad() || b.requires_grad());
  tape.record({a, b}, y, [a, b, y, m, k, n]() {
    Eigen::Map<const MatrixRM> g(y.grad().data(), m, n);
    map2_grad(a, m, k).noalias() += g * map2(b, k, n).transpose();
    map2_grad(b, k, n).noalias() += map2(a, m, k).transpose() * g;
  });
  return y;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require(a.rank() == 2, "transpose: rank-2 tensor required");
  const Index m = a.rows(), n = a.cols();
  ArrayX out(m * n);
  Eigen::Map<MatrixRM>(out.data(), n, m) = map2(a, m, n).transpose();
  Tensor y = Tensor::from_array({n, m}, std::move(out), a.requires_grad());
  tape.record({a}, y, [a, y, m, n]() {
    Eigen::Map<const MatrixRM> g(y.grad().data(), n, m);
    map2_grad(a, m, n).noalias() += g.transpose();
  });
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shapes differ");
  Tensor y = Tensor::from_array(a.shape(), a.values() + b.values(),
                                a.requires_grad() || b.requires_grad());
  tape.record({a, b}, y, [a, b, y]() {
    a.add_grad(y.grad());
    b.add_grad(y.grad());
  });
  return y;
}

Tensor add_rowvec(Tape& tape, const Tensor& m, const Tensor& row_values) {
  require(m.rank() == 2, "add_rowvec: rank-2 tensor required");
  require(row_values.rank() == 1 && row_values.size() == m.cols(),
          "add_rowvec: rank-1 row of matching width required");
  const Index r = m.rows(), c = m.cols();
  ArrayX out(r * c);
  Eigen::Map<const RowArr> rv(row_values.values().data(), c);
  Eigen::Map<MatrixRM> y(out.data(), r, c);
  y.array() = map2(m, r, c).array().rowwise() + rv;
  Tensor t = Tensor::from_array({r, c}, std::move(out),
                                m.requires_grad() || row_values.requires_grad());
  tape.record({m, row_values}, t, [m, row_values, t, r, c]() {
    Eigen::Map<const MatrixRM> g(t.grad().data(), r, c);
    m.add_grad(t.grad());
    row_values.ensure_grad() += g.array().colwise().sum().transpose();
  });
  return t;
}

Tensor scale(Tape& tape, const Tensor& a, Scalar factor) {
  require(std::isfinite(factor), "scale: non-finite factor");
  Tensor y = Tensor::from_array(a.shape(), a.values() * factor, a.requires_grad());
  tape.record({a}, y, [a, y, factor]() { a.add_grad(y.grad() * factor); });
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shapes differ");
  Tensor y = Tensor::from_array(a.shape(), a.values() * b.values(),
                                a.requires_grad() || b.requires_grad());
  tape.record({a, b}, y, [a, b, y]() {
    a.add_grad(y.grad() * b.values());
    b.add_grad(y.grad() * a.values());
  });
  return y;
}

Tensor row(Tape& tape, const Tensor& a, Index r) {
  require(a.rank() == 2, "row: rank-2 tensor required");
  require(r >= 0 && r < a.rows(), "row: index out of range");
  const Index c = a.cols();
  ArrayX out = a.values().segment(r * c, c);
  Tensor y = Tensor::from_array({1, c}, std::move(out), a.requires_grad());
  tape.record({a}, y, [a, y, r, c]() {
    a.ensure_grad().segment(r * c, c) += y.grad();
  });
  return y;
}

Tensor slice_cols(Tape& tape, const Tensor& a, Index first, Index count) {
  require(a.rank() == 2, "slice_cols: rank-2 tensor required");
  require(first >= 0 && count > 0 && first + count <= a.cols(),
          "slice_cols: column range out of bounds");
  const Index r = a.rows(), c = a.cols();
  ArrayX out(r * count);
  Eigen::Map<MatrixRM>(out.data(), r, count) = map2(a, r, c).block(0, first, r, count);
  Tensor y = Tensor::from_array({r, count}, std::move(out), a.requires_grad());
  tape.record({a}, y, [a, y, first, count, r, c]() {
    Eigen::Map<const MatrixRM> g(y.grad().data(), r, count);
    map2_grad(a, r, c).block(0, first, r, count) += g;
  });
  return y;
}

Tensor concat_cols(Tape& tape, std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const Index r = parts.front().rows();
  Index total = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    require(p.rank() == 2 && p.rows() == r, "concat_cols: row counts differ");
    total += p.cols();
    needs_grad = needs_grad || p.requires_grad();
  }
  ArrayX out(r * total);
  Eigen::Map<MatrixRM> y(out.data(), r, total);
  Index at = 0;
  for (const Tensor& p : parts) {
    y.block(0, at, r, p.cols()) = map2(p, r, p.cols());
    at += p.cols();
  }
  Tensor t = Tensor::from_array({r, total}, std::move(out), needs_grad);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  tape.record(inputs, t, [inputs, t, r, total]() {
    Eigen::Map<const MatrixRM> g(t.grad().data(), r, total);
    Index at = 0;
    for (const Tensor& p : inputs) {
      map2_grad(p, r, p.cols()) += g.block(0, at, r, p.cols());
      at += p.cols();
    }
  });
  return t;
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no parts");
  const Index c = parts.front().cols();
  Index total = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    require(p.rank() == 2 && p.cols() == c, "concat_rows: column counts differ");
    total += p.rows();
    needs_grad = needs_grad || p.requires_grad();
  }
  ArrayX out(total * c);
  Index at = 0;
  for (const Tensor& p : parts) {  // row-major: row blocks are contiguous
    out.segment(at, p.size()) = p.values();
    at += p.size();
  }
  Tensor t = Tensor::from_array({total, c}, std::move(out), needs_grad);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  tape.record(inputs, t, [inputs, t]() {
    Index at = 0;
    for (const Tensor& p : inputs) {
      p.ensure_grad() += t.grad().segment(at, p.size());
      at += p.size();
    }
  });
  return t;
}

Tensor as_row(Tape& tape, const Tensor& v) {
  require(v.rank() == 1, "as_row: rank-1 tensor required");
  Tensor y = Tensor::from_array({1, v.size()}, v.values(), v.requires_grad());
  tape.record({v}, y, [v, y]() { v.add_grad(y.grad()); });
  return y;
}

Tensor sum(Tape& tape, const Tensor& a) {
  Tensor y = Tensor::from_array({}, ArrayX::Constant(1, a.values().sum()),
                                a.requires_grad());
  tape.record({a}, y, [a, y]() { a.ensure_grad() += y.grad()(0); });
  return y;
}

Tensor softmax(Tape& tape, const Tensor& a) {
  const auto [slices, width] = last_axis_view(a);
  Tensor y = Tensor::from_array(a.shape(), stable_softmax(a.values(), slices, width),
                                a.requires_grad());
  tape.record({a}, y, [a, y, slices = slices, width = width]() {
    Eigen::Map<const MatrixRM> g(y.grad().data(), slices, width);
    Eigen::Map<const MatrixRM> p(y.values().data(), slices, width);
    const ArrayX dots = (g.array() * p.array()).rowwise().sum();
    a.ensure_grad();
    Eigen::Map<MatrixRM> dx(a.grad().data(), slices, width);
    dx.array() += (g.array().colwise() - dots) * p.array();
  });
  return y;
}

Tensor gelu(Tape& tape, const Tensor& a) {
  const ArrayX phi = a.values().unaryExpr(
      [](Scalar v) { return 0.5 * std::erfc(-v * M_SQRT1_2); });
  Tensor y = Tensor::from_array(a.shape(), a.values() * phi, a.requires_grad());
  tape.record({a}, y, [a, y]() {
    const ArrayX& x = a.values();
    const ArrayX phi = x.unaryExpr([](Scalar v) { return 0.5 * std::erfc(-v * M_SQRT1_2); });
    const ArrayX pdf = (-0.5 * x.square()).exp() * kInvSqrt2Pi;
    a.add_grad(y.grad() * (phi + x * pdf));
  });
  return y;
}

Tensor layernorm(Tape& tape, const Tensor& x, const Tensor& gain,
                 const Tensor& bias, Scalar epsilon) {
  const auto [slices, width] = last_axis_view(x);
  require(gain.rank() == 1 && gain.size() == width,
          "layernorm: gain must be rank-1 of the slice width");
  require(bias.rank() == 1 && bias.size() == width,
          "layernorm: bias must be rank-1 of the slice width");
  require(epsilon > 0, "layernorm: epsilon must be positive");

  const auto normalize = [slices = slices, width = width, epsilon](
                             const ArrayX& flat, Eigen::ArrayXd& inv_out) {
    Eigen::Map<const MatrixRM> xm(flat.data(), slices, width);
    const Eigen::VectorXd mu = xm.rowwise().mean();
    MatrixRM centered = xm.colwise() - mu;
    const ArrayX var = centered.array().square().rowwise().mean();
    inv_out = 1.0 / (var + epsilon).sqrt();
    MatrixRM xhat(slices, width);
    xhat.array() = centered.array().colwise() * inv_out;
    return xhat;
  };

  ArrayX inv;
  const MatrixRM xhat = normalize(x.values(), inv);
  Eigen::Map<const RowArr> g(gain.values().data(), width);
  Eigen::Map<const RowArr> b(bias.values().data(), width);
  ArrayX out(slices * width);
  Eigen::Map<MatrixRM>(out.data(), slices, width).array() =
      (xhat.array().rowwise() * g).rowwise() + b;
  Tensor y = Tensor::from_array(
      x.shape(), std::move(out),
      x.requires_grad() || gain.requires_grad() || bias.requires_grad());

  tape.record({x, gain, bias}, y,
              [x, gain, bias, y, normalize, slices = slices, width = width]() {
    ArrayX inv;
    const MatrixRM xhat = normalize(x.values(), inv);
    Eigen::Map<const MatrixRM> gout(y.grad().data(), slices, width);
    Eigen::Map<const RowArr> gw(gain.values().data(), width);

    gain.ensure_grad();
    bias.ensure_grad();
    Eigen::Map<RowArr>(gain.grad().data(), width) +=
        (gout.array() * xhat.array()).colwise().sum();
    Eigen::Map<RowArr>(bias.grad().data(), width) += gout.array().colwise().sum();

    const Eigen::ArrayXXd dxhat = gout.array().rowwise() * gw;
    const ArrayX m1 = dxhat.rowwise().mean();
    const ArrayX m2 = (dxhat * xhat.array()).rowwise().mean();
    x.ensure_grad();
    Eigen::Map<MatrixRM> dx(x.grad().data(), slices, width);
    dx.array() +=
        (((dxhat.colwise() - m1) - xhat.array().colwise() * m2).colwise() * inv);
  });
  return y;
}

Tensor dropout(Tape& tape, const Tensor& a, Scalar rate, bool training,
               SplitMix64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  const Scalar keep_scale = 1.0 / (1.0 - rate);
  ArrayX mask(a.size());
  for (Index i = 0; i < mask.size(); ++i) {
    mask(i) = rng.next_double() >= rate ? keep_scale : 0.0;
  }
  Tensor y = Tensor::from_array(a.shape(), a.values() * mask, a.requires_grad());
  tape.record({a}, y, [a, y, mask = std::move(mask)]() {
    a.add_grad(y.grad() * mask);
  });
  return y;
}

Tensor cross_entropy(Tape& tape, const Tensor& probabilities,
                     const Tensor& one_hot_targets) {
  require(probabilities.rank() == 2 && one_hot_targets.rank() == 2,
          "cross_entropy: rank-2 tensors required");
  require(probabilities.shape() == one_hot_targets.shape(),
          "cross_entropy: probability and target shapes differ");
  const Index batch = probabilities.rows(), classes = probabilities.cols();
  Eigen::Map<const MatrixRM> p(probabilities.values().data(), batch, classes);
  for (Index b = 0; b < batch; ++b) {
    if (std::abs(p.row(b).sum() - 1.0) > 1e-6) {
      throw ContractError("cross_entropy: probability row does not sum to 1");
    }
  }
  check_one_hot(one_hot_targets);

  Scalar loss = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const Index idx = one_hot_index(one_hot_targets, b);
    loss -= std::log(std::max(p(b, idx), kProbabilityClamp));
  }
  loss /= static_cast<Scalar>(batch);

  Tensor y = Tensor::from_array({}, ArrayX::Constant(1, loss),
                                probabilities.requires_grad());
  tape.record({probabilities, one_hot_targets}, y,
              [probabilities, one_hot_targets, y, batch, classes]() {
    const Scalar upstream = y.grad()(0);
    probabilities.ensure_grad();
    for (Index b = 0; b < batch; ++b) {
      const Index idx = one_hot_index(one_hot_targets, b);
      const Scalar pv = probabilities.values()(b * classes + idx);
      if (pv > kProbabilityClamp) {  // clamped region has zero slope
        probabilities.grad()(b * classes + idx) -=
            upstream / (pv * static_cast<Scalar>(batch));
      }
    }
  });
  return y;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const Tensor& one_hot_targets) {
  require(logits.rank() == 2 && one_hot_targets.rank() == 2,
          "cross_entropy: rank-2 tensors required");
  require(logits.shape() == one_hot_targets.shape(),
          "cross_entropy: logit and target shapes differ");
  check_one_hot(one_hot_targets);
  const Index batch = logits.rows(), classes = logits.cols();
  ArrayX probs = stable_softmax(logits.values(), batch, classes);

  Scalar loss = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const Index idx = one_hot_index(one_hot_targets, b);
    loss -= std::log(std::max(probs(b * classes + idx), kProbabilityClamp));
  }
  loss /= static_cast<Scalar>(batch);

  Tensor y = Tensor::from_array({}, ArrayX::Constant(1, loss), logits.requires_grad());
  tape.record({logits, one_hot_targets}, y,
              [logits, one_hot_targets, y, batch, probs = std::move(probs)]() {
    const Scalar upstream = y.grad()(0);
    logits.add_grad(upstream * (probs - one_hot_targets.values()) /
                    static_cast<Scalar>(batch));
  });
  return y;
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const GradCheckEntry& e : entries) w = std::max(w, e.max_rel_err);
  return w;
}

GradCheckReport finite_diff_check(
    const std::function<Tensor(Tape&)>& scalar_fn,
    const std::vector<std::pair<std::string, Tensor>>& params, double h,
    double tol) {
  require(h > 0.0 && tol > 0.0, "finite_diff_check: h and tol must be positive");

  GradCheckReport report;
  report.step = h;
  report.tolerance = tol;

  Tape tape;
  const Tensor loss = scalar_fn(tape);
  require(loss.is_scalar(), "finite_diff_check: loss must be scalar");
  for (const auto& [name, p] : params) p.zero_grad();
  tape.backward(loss);

  bool passed = true;
  for (const auto& [name, p] : params) {
    const ArrayX analytic = p.has_grad() ? p.grad() : ArrayX::Zero(p.size());
    double worst = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
      const Scalar original = p.values()(i);
      p.values()(i) = original + h;
      Tape plus;
      const double f_plus = scalar_fn(plus).value();
      p.values()(i) = original - h;
      Tape minus;
      const double f_minus = scalar_fn(minus).value();
      p.values()(i) = original;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double denom =
          std::max({std::abs(analytic(i)), std::abs(numeric), 1e-5});
      worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
    }
    report.entries.push_back({name, worst});
    passed = passed && worst <= tol;
  }
  report.passed = passed;
  return report;
}

}  // namespace posevit
