// Tensor library: construction contracts, handle semantics, forward values
// of every op against independently computed references, reverse-mode
// gradients (hand-derived and finite-difference), and the seeded RNG.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "posevit/rng.hpp"
#include "posevit/tensor.hpp"

using namespace posevit;

namespace {

Tensor param(Shape shape, std::vector<double> values) {
  return Tensor::from_values(std::move(shape), std::move(values), /*requires_grad=*/true);
}

std::vector<double> to_vec(const Tensor& t) {
  return {t.values().data(), t.values().data() + t.size()};
}

}  // namespace

// ---------------------------------------------------------------- plumbing

TEST_CASE("factories validate shapes and finiteness") {
  CHECK(Tensor::zeros({2, 3}).size() == 6);
  CHECK(Tensor::scalar(4.0).is_scalar());
  CHECK(Tensor::scalar(4.0).value() == 4.0);
  CHECK(Tensor::zeros({}).size() == 1);  // rank-0 scalar
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ContractError);
  CHECK_THROWS_AS(Tensor::zeros({-1}), ContractError);
  CHECK_THROWS_AS(Tensor::from_values({2}, {1.0}), ContractError);
  CHECK_THROWS_AS(Tensor::from_values({1}, {std::numeric_limits<double>::infinity()}),
                  ContractError);
  CHECK_THROWS_AS(Tensor::from_values({1}, {std::numeric_limits<double>::quiet_NaN()}),
                  ContractError);
}

TEST_CASE("tensor copies alias one node, clone detaches") {
  Tensor a = param({2}, {1.0, 2.0});
  Tensor alias = a;
  alias.values()(0) = 7.0;
  CHECK(a.values()(0) == 7.0);
  CHECK(a.node_id() == alias.node_id());

  Tensor deep = a.clone();
  CHECK(deep.node_id() != a.node_id());
  deep.values()(0) = -1.0;
  CHECK(a.values()(0) == 7.0);
}

TEST_CASE("gradient buffers accumulate additively") {
  Tensor a = param({2}, {0.0, 0.0});
  CHECK(!a.has_grad());
  a.ensure_grad();
  CHECK(a.has_grad());
  ArrayX delta(2);
  delta << 1.0, 2.0;
  a.add_grad(delta);
  a.add_grad(delta);
  CHECK(a.grad()(0) == 2.0);
  CHECK(a.grad()(1) == 4.0);
  a.zero_grad();
  CHECK(a.grad()(0) == 0.0);
}

// ---------------------------------------------------------- forward values

TEST_CASE("matmul computes [[1,2],[3,4]] x [[5],[6]] = [[17],[39]]") {
  Tape tape;
  const Tensor a = param({2, 2}, {1, 2, 3, 4});
  const Tensor b = param({2, 1}, {5, 6});
  const Tensor c = matmul(tape, a, b);
  CHECK(to_vec(c) == std::vector<double>{17, 39});
  CHECK_THROWS_AS(matmul(tape, a, param({3, 1}, {1, 2, 3})), ContractError);
}

TEST_CASE("transpose swaps extents and round trips") {
  Tape tape;
  const Tensor a = param({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor t = transpose(tape, a);
  CHECK(t.shape() == Shape{3, 2});
  CHECK(to_vec(t) == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(to_vec(transpose(tape, t)) == to_vec(a));
}

TEST_CASE("elementwise add, mul, scale") {
  Tape tape;
  const Tensor a = param({2}, {1, 2});
  const Tensor b = param({2}, {10, 20});
  CHECK(to_vec(add(tape, a, b)) == std::vector<double>{11, 22});
  CHECK(to_vec(mul(tape, a, b)) == std::vector<double>{10, 40});
  CHECK(to_vec(scale(tape, a, -2.0)) == std::vector<double>{-2, -4});
  CHECK_THROWS_AS(add(tape, a, param({3}, {1, 2, 3})), ContractError);
}

TEST_CASE("add_rowvec broadcasts a bias over rows") {
  Tape tape;
  const Tensor m = param({2, 2}, {1, 2, 3, 4});
  const Tensor bias = param({2}, {10, 100});
  CHECK(to_vec(add_rowvec(tape, m, bias)) == std::vector<double>{11, 102, 13, 104});
}

TEST_CASE("row, slice_cols, as_row, concat recompose matrices") {
  Tape tape;
  const Tensor m = param({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(to_vec(row(tape, m, 1)) == std::vector<double>{4, 5, 6});
  CHECK(row(tape, m, 1).shape() == Shape{1, 3});
  CHECK(to_vec(slice_cols(tape, m, 1, 2)) == std::vector<double>{2, 3, 5, 6});

  const Tensor left = slice_cols(tape, m, 0, 1);
  const Tensor right = slice_cols(tape, m, 1, 2);
  const std::vector<Tensor> parts{left, right};
  CHECK(to_vec(concat_cols(tape, parts)) == to_vec(m));

  const Tensor r0 = row(tape, m, 0);
  const Tensor r1 = row(tape, m, 1);
  const std::vector<Tensor> rows{r0, r1};
  CHECK(to_vec(concat_rows(tape, rows)) == to_vec(m));

  const Tensor v = param({3}, {7, 8, 9});
  CHECK(as_row(tape, v).shape() == Shape{1, 3});
  CHECK(to_vec(as_row(tape, v)) == std::vector<double>{7, 8, 9});
}

TEST_CASE("sum reduces to a scalar") {
  Tape tape;
  CHECK(sum(tape, param({2, 2}, {1, 2, 3, 4})).value() == 10.0);
}

TEST_CASE("softmax matches the frozen reference for [1,2,3]") {
  Tape tape;
  const Tensor x = param({1, 3}, {1, 2, 3});
  const Tensor p = softmax(tape, x);
  CHECK(p.values()(0) == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(p.values()(1) == doctest::Approx(0.24472847105479764).epsilon(1e-12));
  CHECK(p.values()(2) == doctest::Approx(0.6652409557748218).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to 1 within 1e-9 and survive huge shifts") {
  Tape tape;
  SplitMix64 rng(17);
  ArrayX vals(4 * 6);
  for (Index i = 0; i < vals.size(); ++i) vals(i) = 200.0 * (rng.next_double() - 0.5);
  const Tensor x = Tensor::from_array({4, 6}, vals);
  const Tensor p = softmax(tape, x);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) s += p.values()(r * 6 + c);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }

  // Shift invariance: softmax(x + c) == softmax(x) for constant row shifts.
  const Tensor shifted = Tensor::from_array({4, 6}, vals + 123.456);
  const Tensor q = softmax(tape, shifted);
  for (Index i = 0; i < vals.size(); ++i) {
    CHECK(std::abs(p.values()(i) - q.values()(i)) <= 1e-12);
  }

  // Extreme magnitudes stay finite thanks to the max subtraction.
  const Tensor big = param({1, 2}, {1000.0, -1000.0});
  const Tensor pb = softmax(tape, big);
  CHECK(std::isfinite(pb.values()(0)));
  CHECK(pb.values()(0) == doctest::Approx(1.0));
}

TEST_CASE("gelu matches x*Phi(x) at reference points") {
  Tape tape;
  const Tensor x = param({4}, {1.0, -1.0, 0.0, 2.0});
  const Tensor y = gelu(tape, x);
  CHECK(y.values()(0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(y.values()(1) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
  CHECK(y.values()(2) == 0.0);
  CHECK(y.values()(3) == doctest::Approx(1.9544997361036416).epsilon(1e-14));
}

TEST_CASE("layernorm normalizes [1,3] to +-0.9999950000374997 under eps 1e-5") {
  Tape tape;
  const Tensor x = param({1, 2}, {1.0, 3.0});
  const Tensor gain = param({2}, {1.0, 1.0});
  const Tensor bias = param({2}, {0.0, 0.0});
  const Tensor y = layernorm(tape, x, gain, bias);
  CHECK(y.values()(0) == doctest::Approx(-0.9999950000374997).epsilon(1e-14));
  CHECK(y.values()(1) == doctest::Approx(0.9999950000374997).epsilon(1e-14));
}

TEST_CASE("layernorm maps constant slices to bias exactly") {
  Tape tape;
  const Tensor x = param({2, 3}, {5, 5, 5, -2, -2, -2});
  const Tensor gain = param({3}, {2.0, 3.0, 4.0});
  const Tensor bias = param({3}, {0.5, -0.5, 0.0});
  const Tensor y = layernorm(tape, x, gain, bias);
  // Centered values are exactly zero, so gain cannot leak through.
  CHECK(to_vec(y) == std::vector<double>{0.5, -0.5, 0.0, 0.5, -0.5, 0.0});
}

TEST_CASE("layernorm applies gain and bias per column") {
  Tape tape;
  const Tensor x = param({1, 2}, {1.0, 3.0});
  const Tensor gain = param({2}, {2.0, -1.0});
  const Tensor bias = param({2}, {10.0, 20.0});
  const Tensor y = layernorm(tape, x, gain, bias);
  const double xhat = 0.9999950000374997;
  CHECK(y.values()(0) == doctest::Approx(10.0 + 2.0 * -xhat).epsilon(1e-12));
  CHECK(y.values()(1) == doctest::Approx(20.0 + -1.0 * xhat).epsilon(1e-12));
}

TEST_CASE("dropout is the identity when disabled") {
  Tape tape;
  SplitMix64 rng(1);
  const Tensor x = param({2, 2}, {1, 2, 3, 4});
  const Tensor eval_mode = dropout(tape, x, 0.5, /*training=*/false, rng);
  CHECK(eval_mode.node_id() == x.node_id());
  const Tensor zero_rate = dropout(tape, x, 0.0, /*training=*/true, rng);
  CHECK(zero_rate.node_id() == x.node_id());
  CHECK_THROWS_AS(dropout(tape, x, 1.0, true, rng), ContractError);
  CHECK_THROWS_AS(dropout(tape, x, -0.1, true, rng), ContractError);
}

TEST_CASE("dropout zeroes or rescales by exactly 1/(1-rate)") {
  Tape tape;
  SplitMix64 rng(88);
  const double rate = 0.25;
  const Tensor x = Tensor::full({100, 10}, 2.0);
  const Tensor y = dropout(tape, x, rate, true, rng);
  int kept = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y.values()(i);
    if (v != 0.0) {
      CHECK(v == doctest::Approx(2.0 / (1.0 - rate)).epsilon(1e-15));
      ++kept;
    }
  }
  // 1000 Bernoulli(0.75) draws: mean 750, sd ~13.7; +-6 sd window.
  CHECK(kept > 668);
  CHECK(kept < 832);
}

TEST_CASE("dropout masks are seed deterministic") {
  const Tensor x = Tensor::full({8, 8}, 1.0);
  Tape t1, t2;
  SplitMix64 r1(5), r2(5);
  const Tensor a = dropout(t1, x, 0.5, true, r1);
  const Tensor b = dropout(t2, x, 0.5, true, r2);
  CHECK(to_vec(a) == to_vec(b));
}

TEST_CASE("cross entropy of a uniform 16-way distribution is ln 16") {
  Tape tape;
  const Tensor p = Tensor::full({1, 16}, 1.0 / 16.0);
  const Tensor t = param({1, 16}, [] {
    std::vector<double> v(16, 0.0);
    v[3] = 1.0;
    return v;
  }());
  const Tensor loss = cross_entropy(tape, p, t);
  CHECK(loss.value() == doctest::Approx(2.772588722239781).epsilon(1e-14));
}

TEST_CASE("cross entropy averages over the batch: two rows of [0.5,0.5] give ln 2") {
  Tape tape;
  const Tensor p = param({2, 2}, {0.5, 0.5, 0.5, 0.5});
  const Tensor t = param({2, 2}, {1, 0, 0, 1});
  CHECK(cross_entropy(tape, p, t).value() ==
        doctest::Approx(0.6931471805599453).epsilon(1e-14));
}

TEST_CASE("cross entropy clamps probabilities at 1e-12 with zero slope below") {
  Tape tape;
  const Tensor p = param({1, 2}, {1e-15, 1.0 - 1e-15});
  const Tensor t = param({1, 2}, {1.0, 0.0});
  const Tensor loss = cross_entropy(tape, p, t);
  CHECK(loss.value() == doctest::Approx(27.631021115928547).epsilon(1e-14));
  tape.backward(loss);
  CHECK(p.grad()(0) == 0.0);  // clamped region: no slope
  CHECK(p.grad()(1) == 0.0);  // not the true class
}

TEST_CASE("cross entropy rejects rows that do not sum to one and fuzzy targets") {
  Tape tape;
  CHECK_THROWS_AS(
      cross_entropy(tape, param({1, 2}, {0.3, 0.3}), param({1, 2}, {1, 0})),
      ContractError);
  CHECK_THROWS_AS(
      cross_entropy(tape, param({1, 2}, {0.5, 0.5}), param({1, 2}, {0.5, 0.5})),
      ContractError);
  CHECK_THROWS_AS(
      cross_entropy(tape, param({1, 2}, {0.5, 0.5}), param({1, 2}, {1, 1})),
      ContractError);
}

TEST_CASE("fused softmax cross entropy: logits [0,0] give loss ln2, grad [-0.5,0.5]") {
  Tape tape;
  const Tensor logits = param({1, 2}, {0.0, 0.0});
  const Tensor targets = param({1, 2}, {1.0, 0.0});
  const Tensor loss = softmax_cross_entropy(tape, logits, targets);
  CHECK(loss.value() == doctest::Approx(0.6931471805599453).epsilon(1e-14));
  tape.backward(loss);
  CHECK(logits.grad()(0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(logits.grad()(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("fused and unfused cross entropy agree within 1e-9 on values and grads") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logit_vals(3 * 5);
    for (double& v : logit_vals) v = 8.0 * (rng.next_double() - 0.5);
    std::vector<double> target_vals(3 * 5, 0.0);
    for (int r = 0; r < 3; ++r) {
      target_vals[r * 5 + static_cast<int>(rng.next_below(5))] = 1.0;
    }

    Tape t_fused;
    const Tensor lf = param({3, 5}, logit_vals);
    const Tensor tf = param({3, 5}, target_vals);
    const Tensor fused = softmax_cross_entropy(t_fused, lf, tf);
    t_fused.backward(fused);

    Tape t_chain;
    const Tensor lc = param({3, 5}, logit_vals);
    const Tensor tc = param({3, 5}, target_vals);
    const Tensor chained = cross_entropy(t_chain, softmax(t_chain, lc), tc);
    t_chain.backward(chained);

    CHECK(std::abs(fused.value() - chained.value()) <= 1e-9);
    for (Index i = 0; i < lf.size(); ++i) {
      CHECK(std::abs(lf.grad()(i) - lc.grad()(i)) <= 1e-9);
    }
  }
}

// -------------------------------------------------------------- gradients

TEST_CASE("sum backward seeds ones everywhere") {
  Tape tape;
  const Tensor a = param({2, 2}, {1, 2, 3, 4});
  tape.backward(sum(tape, a));
  for (Index i = 0; i < 4; ++i) CHECK(a.grad()(i) == 1.0);
}

TEST_CASE("fan-out accumulates: d/dx sum(x + x) = 2") {
  Tape tape;
  const Tensor x = param({3}, {1, 2, 3});
  tape.backward(sum(tape, add(tape, x, x)));
  for (Index i = 0; i < 3; ++i) CHECK(x.grad()(i) == 2.0);
}

TEST_CASE("matmul backward: dA = g B^T, dB = A^T g") {
  Tape tape;
  const Tensor a = param({2, 2}, {1, 2, 3, 4});
  const Tensor b = param({2, 1}, {5, 6});
  tape.backward(sum(tape, matmul(tape, a, b)));
  // g is all ones [2x1]; dA = g B^T = [[5,6],[5,6]], dB = A^T g = [[4],[6]].
  CHECK(a.grad()(0) == 5.0);
  CHECK(a.grad()(1) == 6.0);
  CHECK(a.grad()(2) == 5.0);
  CHECK(a.grad()(3) == 6.0);
  CHECK(b.grad()(0) == 4.0);
  CHECK(b.grad()(1) == 6.0);
}

TEST_CASE("add_rowvec backward sums the bias gradient over rows") {
  Tape tape;
  const Tensor m = param({3, 2}, {1, 2, 3, 4, 5, 6});
  const Tensor bias = param({2}, {0, 0});
  tape.backward(sum(tape, add_rowvec(tape, m, bias)));
  CHECK(bias.grad()(0) == 3.0);
  CHECK(bias.grad()(1) == 3.0);
}

TEST_CASE("gelu backward matches Phi(x) + x phi(x)") {
  Tape tape;
  const Tensor x = param({2}, {1.0, -1.0});
  tape.backward(sum(tape, gelu(tape, x)));
  CHECK(x.grad()(0) == doctest::Approx(1.0833154705876864).epsilon(1e-12));
  CHECK(x.grad()(1) == doctest::Approx(-0.08331547058768629).epsilon(1e-12));
}

TEST_CASE("slice and concat route gradients to their sources") {
  Tape tape;
  const Tensor m = param({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor mid = slice_cols(tape, m, 1, 1);
  tape.backward(sum(tape, mid));
  CHECK(to_vec(Tensor::from_array({6}, m.grad())) ==
        std::vector<double>{0, 1, 0, 0, 1, 0});
}

TEST_CASE("dropout backward scales gradients by the forward mask") {
  Tape tape;
  SplitMix64 rng(21);
  const Tensor x = param({1, 64}, std::vector<double>(64, 1.0));
  const Tensor y = dropout(tape, x, 0.5, true, rng);
  tape.backward(sum(tape, y));
  for (Index i = 0; i < 64; ++i) {
    if (y.values()(i) == 0.0) {
      CHECK(x.grad()(i) == 0.0);
    } else {
      CHECK(x.grad()(i) == doctest::Approx(2.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("backward requires a scalar loss recorded on the same tape") {
  Tape tape;
  const Tensor m = param({2, 2}, {1, 2, 3, 4});
  const Tensor off_tape = Tensor::scalar(1.0);
  CHECK_THROWS_AS(tape.backward(add(tape, m, m)), ContractError);
  CHECK_THROWS_AS(tape.backward(off_tape), ContractError);
}

TEST_CASE("losses on separate tapes accumulate into a shared parameter") {
  const Tensor x = param({2}, {1, 2});
  Tape t1, t2;
  t1.backward(sum(t1, x));
  t2.backward(sum(t2, scale(t2, x, 3.0)));
  CHECK(x.grad()(0) == 4.0);  // 1 from the first graph, 3 from the second
  CHECK(x.grad()(1) == 4.0);
}

TEST_CASE("identical graphs rebuilt on fresh tapes give identical gradients") {
  auto build = [](Tape& tape, const Tensor& w) {
    const Tensor x = Tensor::from_values({2, 2}, {0.4, -0.2, 0.9, 0.1});
    return sum(tape, gelu(tape, matmul(tape, x, w)));
  };
  const std::vector<double> init{0.3, -0.7, 0.2, 0.5};
  Tensor w1 = param({2, 2}, init);
  Tensor w2 = param({2, 2}, init);
  Tape t1, t2;
  t1.backward(build(t1, w1));
  t2.backward(build(t2, w2));
  for (Index i = 0; i < 4; ++i) CHECK(w1.grad()(i) == w2.grad()(i));
}

TEST_CASE("finite differences confirm a layernorm-attention-style composite") {
  // f(W, g, b) = ce(softmax(ln(x W, g, b)), t): touches matmul, layernorm,
  // softmax and the loss in one graph.
  const Tensor x = Tensor::from_values({2, 3}, {0.2, -0.4, 0.6, 1.0, 0.3, -0.8});
  Tensor w = param({3, 3}, {0.1, 0.5, -0.3, 0.2, -0.2, 0.4, 0.7, 0.0, -0.5});
  Tensor gain = param({3}, {1.1, 0.9, 1.0});
  Tensor bias = param({3}, {0.0, 0.1, -0.1});
  const Tensor targets = Tensor::from_values({2, 3}, {0, 1, 0, 1, 0, 0});

  const auto fn = [&](Tape& tape) {
    const Tensor h = layernorm(tape, matmul(tape, x, w), gain, bias);
    return cross_entropy(tape, softmax(tape, h), targets);
  };
  const GradCheckReport report = finite_diff_check(
      fn, {{"w", w}, {"gain", gain}, {"bias", bias}}, 1e-5, 1e-4);
  CHECK(report.passed);
  CHECK(report.worst() <= 1e-4);
  REQUIRE(report.entries.size() == 3);
}

TEST_CASE("finite_diff_check flags a wrong gradient") {
  Tensor xx = param({2}, {0.3, -0.4});
  // f = sum(x^2): correct everywhere, so the check passes.
  const auto correct = [&](Tape& tape) { return sum(tape, mul(tape, xx, xx)); };
  CHECK(finite_diff_check(correct, {{"x", xx}}, 1e-5, 1e-4).passed);

  // The analytic pass runs first and exactly once; doubling only that call
  // makes the recorded gradient disagree with every numeric probe.
  int calls = 0;
  const auto inconsistent = [&](Tape& tape) {
    ++calls;
    const double factor = (calls == 1) ? 2.0 : 1.0;
    return scale(tape, sum(tape, mul(tape, xx, xx)), factor);
  };
  CHECK(!finite_diff_check(inconsistent, {{"x", xx}}, 1e-5, 1e-4).passed);
}

// ------------------------------------------------------------------- rng

TEST_CASE("splitmix64 matches the published reference sequence") {
  SplitMix64 g0(0);
  CHECK(g0.next_u64() == 0xe220a8397b1dcdafull);
  CHECK(g0.next_u64() == 0x6e789e6aa1b965f4ull);
  CHECK(g0.next_u64() == 0x06c45d188009454full);
  SplitMix64 g42(42);
  CHECK(g42.next_u64() == 0xbdd732262feb6e95ull);
  CHECK(g42.next_u64() == 0x28efe333b266f103ull);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("hello") == 0xa430d84680aabd0bull);
}

TEST_CASE("next_double lies in [0,1) and next_below respects its bound") {
  SplitMix64 g(123);
  for (int i = 0; i < 1000; ++i) {
    const double d = g.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(g.next_below(7) < 7);
  }
}

TEST_CASE("box-muller normals have the right first two moments") {
  SplitMix64 g(2024);
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("truncated normal stays inside the bound with the truncated sigma") {
  SplitMix64 g(5150);
  const int n = 40000;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_truncated_normal(0.02, 0.04);
    CHECK(std::abs(x) <= 0.04);
    sum_sq += x * x;
  }
  // Resampling beyond two sigma shrinks the stddev to
  // 0.02*sqrt(1 - 2*2*phi(2)/(Phi(2)-Phi(-2))) = 0.0175925...
  const double sd = std::sqrt(sum_sq / n);
  CHECK(sd == doctest::Approx(0.017592513220684797).epsilon(0.02));
}

TEST_CASE("split produces a decorrelated child stream") {
  SplitMix64 parent(9);
  SplitMix64 child = parent.split();
  const std::uint64_t a = parent.next_u64();
  const std::uint64_t b = child.next_u64();
  CHECK(a != b);
  // Determinism: same construction, same streams.
  SplitMix64 parent2(9);
  SplitMix64 child2 = parent2.split();
  CHECK(child2.next_u64() == b);
}

TEST_CASE("mix_seed separates sub-streams deterministically") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != mix_seed(0, 1));
}
