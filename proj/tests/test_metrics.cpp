// Confusion-matrix bookkeeping, one-vs-rest metric derivation, and the CSV
// report renderings.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "posevit/error.hpp"
#include "posevit/metrics.hpp"

using namespace posevit;

namespace {

// 100-sample binary case used throughout: 9 true positives for class one,
// one class-two sample leaking into class one, everything else correct.
ConfusionMatrix binary_case() {
  ConfusionMatrix m(2);
  for (int i = 0; i < 9; ++i) m.accumulate(0, 0);
  m.accumulate(1, 0);
  for (int i = 0; i < 90; ++i) m.accumulate(1, 1);
  return m;
}

}  // namespace

TEST_CASE("confusion matrix construction and bounds") {
  CHECK_THROWS_AS(ConfusionMatrix(0), ContractError);
  CHECK_THROWS_AS(ConfusionMatrix(-3), ContractError);
  ConfusionMatrix m(3);
  CHECK(m.num_classes() == 3);
  CHECK(m.total() == 0);
  CHECK_THROWS_AS(m.accumulate(3, 0), ContractError);
  CHECK_THROWS_AS(m.accumulate(0, 3), ContractError);
  CHECK_THROWS_AS(m.accumulate(-1, 0), ContractError);
  CHECK_THROWS_AS(m.at(0, 3), ContractError);
  m.accumulate(2, 1);
  CHECK(m.at(2, 1) == 1);
  CHECK(m.total() == 1);
}

TEST_CASE("merge adds counts cell by cell and rejects size mismatches") {
  ConfusionMatrix a(2), b(2);
  a.accumulate(0, 0);
  a.accumulate(1, 0);
  b.accumulate(1, 0);
  b.accumulate(1, 1);
  a.merge(b);
  CHECK(a.at(0, 0) == 1);
  CHECK(a.at(1, 0) == 2);
  CHECK(a.at(1, 1) == 1);
  CHECK(a.total() == 4);
  ConfusionMatrix c(3);
  CHECK_THROWS_AS(a.merge(c), ContractError);
}

TEST_CASE("binary case: per-class rows match hand-computed ratios") {
  const ClassMetrics m = compute_metrics(binary_case());
  REQUIRE(m.per_class.size() == 2);

  const ClassMetricsRow& c1 = m.per_class[0];  // tp 9, fn 0, fp 1, tn 90
  CHECK(c1.precision == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(c1.recall == 1.0);
  CHECK(c1.f1 == doctest::Approx(0.9473684210526316).epsilon(1e-12));
  CHECK(c1.specificity == doctest::Approx(0.989010989010989).epsilon(1e-12));
  CHECK(c1.fpr == doctest::Approx(0.01098901098901099).epsilon(1e-12));
  CHECK(c1.accuracy == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(!c1.undefined);

  const ClassMetricsRow& c2 = m.per_class[1];  // tp 90, fn 1, fp 0, tn 9
  CHECK(c2.precision == 1.0);
  CHECK(c2.recall == doctest::Approx(0.989010989010989).epsilon(1e-12));
  CHECK(c2.f1 == doctest::Approx(0.994475138121547).epsilon(1e-12));
  CHECK(c2.specificity == 1.0);
  CHECK(c2.fpr == 0.0);
  CHECK(c2.accuracy == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(!c2.undefined);
}

TEST_CASE("false-positive rate and specificity complement each other exactly") {
  // Both ratios share the denominator tn+fp, so their sum is exactly 1.0
  // in binary64 for this case (90/91 + 1/91).
  const ClassMetrics m = compute_metrics(binary_case());
  CHECK(m.per_class[0].fpr + m.per_class[0].specificity == 1.0);
  CHECK(m.per_class[1].fpr + m.per_class[1].specificity == 1.0);
}

TEST_CASE("macro row is the unweighted mean of the class rows") {
  const ClassMetrics m = compute_metrics(binary_case());
  CHECK(m.macro.precision == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(m.macro.recall == doctest::Approx(0.9945054945054945).epsilon(1e-12));
  CHECK(m.macro.f1 == doctest::Approx(0.9709217795870893).epsilon(1e-12));
  CHECK(m.macro.specificity == doctest::Approx(0.9945054945054945).epsilon(1e-12));
  CHECK(m.macro.fpr == doctest::Approx(0.005494505494505495).epsilon(1e-12));
  CHECK(m.macro.accuracy == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("three-class spot check against direct counting") {
  ConfusionMatrix m(3);
  // true 0: 4 right, 1 as class 2; true 1: 3 right; true 2: 2 right, 2 as class 1.
  for (int i = 0; i < 4; ++i) m.accumulate(0, 0);
  m.accumulate(0, 2);
  for (int i = 0; i < 3; ++i) m.accumulate(1, 1);
  for (int i = 0; i < 2; ++i) m.accumulate(2, 2);
  for (int i = 0; i < 2; ++i) m.accumulate(2, 1);
  const ClassMetrics metrics = compute_metrics(m);  // total 12

  // class 1 (index 1): tp 3, fp 2, fn 0, tn 7.
  CHECK(metrics.per_class[1].precision == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(metrics.per_class[1].recall == 1.0);
  CHECK(metrics.per_class[1].specificity == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
  // class 2 (index 2): tp 2, fp 1, fn 2, tn 7.
  CHECK(metrics.per_class[2].precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(metrics.per_class[2].recall == 0.5);
  CHECK(metrics.per_class[2].accuracy == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("zero-denominator ratios report zero with the undefined flag") {
  // Single-class matrix: the lone class has tn = fp = 0, so specificity and
  // fpr are 0/0.
  ConfusionMatrix m(1);
  m.accumulate(0, 0);
  const ClassMetrics metrics = compute_metrics(m);
  CHECK(metrics.per_class[0].precision == 1.0);
  CHECK(metrics.per_class[0].recall == 1.0);
  CHECK(metrics.per_class[0].specificity == 0.0);
  CHECK(metrics.per_class[0].fpr == 0.0);
  CHECK(metrics.per_class[0].undefined);
  CHECK(metrics.macro.undefined);

  // A class that never appears and is never predicted: precision and recall
  // are both 0/0.
  ConfusionMatrix two(2);
  two.accumulate(0, 0);
  const ClassMetrics sparse = compute_metrics(two);
  CHECK(sparse.per_class[1].precision == 0.0);
  CHECK(sparse.per_class[1].recall == 0.0);
  CHECK(sparse.per_class[1].f1 == 0.0);
  CHECK(sparse.per_class[1].undefined);
}

TEST_CASE("metrics require at least one accumulated sample") {
  CHECK_THROWS_AS(compute_metrics(ConfusionMatrix(4)), ContractError);
}

TEST_CASE("class labels are one-based with a C prefix") {
  CHECK(class_label(0) == "C1");
  CHECK(class_label(15) == "C16");
  CHECK_THROWS_AS(class_label(-1), ContractError);
}

TEST_CASE("metrics csv renders six decimal places with an average row") {
  const ClassMetrics m = compute_metrics(binary_case());
  std::ostringstream out;
  write_metrics_csv(m, out);
  CHECK(out.str() ==
        "class,precision,recall,f1,specificity,fpr,accuracy\n"
        "C1,0.900000,1.000000,0.947368,0.989011,0.010989,0.990000\n"
        "C2,1.000000,0.989011,0.994475,1.000000,0.000000,0.990000\n"
        "average,0.950000,0.994505,0.970922,0.994505,0.005495,0.990000\n");
}

TEST_CASE("confusion csv lists counts under prediction-labelled columns") {
  std::ostringstream out;
  write_confusion_csv(binary_case(), out);
  CHECK(out.str() ==
        "true\\predicted,C1,C2\n"
        "C1,9,0\n"
        "C2,1,90\n");
}
