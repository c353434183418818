#include "posevit/metrics.hpp"

#include <cstdio>

#include "posevit/error.hpp"

namespace posevit {

namespace {

double ratio(long long numerator, long long denominator, bool& undefined) {
  if (denominator == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 1) throw ContractError("confusion: at least one class required");
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::accumulate(int true_class, int predicted_class) {
  if (true_class < 0 || true_class >= num_classes_ || predicted_class < 0 ||
      predicted_class >= num_classes_) {
    throw ContractError("confusion: class index out of range");
  }
  ++counts_[static_cast<std::size_t>(true_class) * num_classes_ + predicted_class];
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw ContractError("confusion: merging matrices of different sizes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

long long ConfusionMatrix::at(int true_class, int predicted_class) const {
  if (true_class < 0 || true_class >= num_classes_ || predicted_class < 0 ||
      predicted_class >= num_classes_) {
    throw ContractError("confusion: class index out of range");
  }
  return counts_[static_cast<std::size_t>(true_class) * num_classes_ + predicted_class];
}

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (const long long c : counts_) t += c;
  return t;
}

ClassMetrics compute_metrics(const ConfusionMatrix& matrix) {
  const int k = matrix.num_classes();
  const long long total = matrix.total();
  if (total < 1) throw ContractError("metrics: empty confusion matrix");

  ClassMetrics out;
  out.per_class.resize(k);
  for (int c = 0; c < k; ++c) {
    long long row_sum = 0, col_sum = 0;
    for (int j = 0; j < k; ++j) {
      row_sum += matrix.at(c, j);
      col_sum += matrix.at(j, c);
    }
    const long long tp = matrix.at(c, c);
    const long long fn = row_sum - tp;
    const long long fp = col_sum - tp;
    const long long tn = total - tp - fn - fp;

    ClassMetricsRow& row = out.per_class[c];
    row.precision = ratio(tp, tp + fp, row.undefined);
    row.recall = ratio(tp, tp + fn, row.undefined);
    if (row.precision + row.recall > 0.0) {
      row.f1 = 2.0 * row.precision * row.recall / (row.precision + row.recall);
    } else {
      row.undefined = true;
      row.f1 = 0.0;
    }
    row.specificity = ratio(tn, tn + fp, row.undefined);
    row.fpr = ratio(fp, fp + tn, row.undefined);
    row.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  }

  ClassMetricsRow& macro = out.macro;
  for (const ClassMetricsRow& row : out.per_class) {
    macro.precision += row.precision;
    macro.recall += row.recall;
    macro.f1 += row.f1;
    macro.specificity += row.specificity;
    macro.fpr += row.fpr;
    macro.accuracy += row.accuracy;
    macro.undefined = macro.undefined || row.undefined;
  }
  macro.precision /= k;
  macro.recall /= k;
  macro.f1 /= k;
  macro.specificity /= k;
  macro.fpr /= k;
  macro.accuracy /= k;
  return out;
}

std::string class_label(int index) {
  if (index < 0) throw ContractError("class_label: negative index");
  return "C" + std::to_string(index + 1);
}

void write_metrics_csv(const ClassMetrics& metrics, std::ostream& out) {
  out << "class,precision,recall,f1,specificity,fpr,accuracy\n";
  for (std::size_t c = 0; c < metrics.per_class.size(); ++c) {
    const ClassMetricsRow& row = metrics.per_class[c];
    out << class_label(static_cast<int>(c)) << ',' << fmt(row.precision) << ','
        << fmt(row.recall) << ',' << fmt(row.f1) << ',' << fmt(row.specificity)
        << ',' << fmt(row.fpr) << ',' << fmt(row.accuracy) << '\n';
  }
  const ClassMetricsRow& m = metrics.macro;
  out << "average," << fmt(m.precision) << ',' << fmt(m.recall) << ',' << fmt(m.f1)
      << ',' << fmt(m.specificity) << ',' << fmt(m.fpr) << ',' << fmt(m.accuracy)
      << '\n';
}

void write_confusion_csv(const ConfusionMatrix& matrix, std::ostream& out) {
  const int k = matrix.num_classes();
  out << "true\\predicted";
  for (int j = 0; j < k; ++j) out << ',' << class_label(j);
  out << '\n';
  for (int i = 0; i < k; ++i) {
    out << class_label(i);
    for (int j = 0; j < k; ++j) out << ',' << matrix.at(i, j);
    out << '\n';
  }
}

}  // namespace posevit
