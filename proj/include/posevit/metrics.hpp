#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace posevit {

// k x k count matrix, rows indexed by true class, columns by prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void accumulate(int true_class, int predicted_class);
  ConfusionMatrix& merge(const ConfusionMatrix& other);

  long long at(int true_class, int predicted_class) const;
  int num_classes() const { return num_classes_; }
  long long total() const;

 private:
  int num_classes_;
  std::vector<long long> counts_;
};

// One-vs-rest metrics for a single class. A ratio whose numerator and
// denominator are both zero is reported as 0 with the flag set.
struct ClassMetricsRow {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
  double fpr = 0.0;
  double accuracy = 0.0;
  bool undefined = false;
};

struct ClassMetrics {
  std::vector<ClassMetricsRow> per_class;
  ClassMetricsRow macro;  // unweighted means over classes
};

// Requires at least one accumulated sample.
ClassMetrics compute_metrics(const ConfusionMatrix& matrix);

// "C1".."Ck" naming used in reports and fusion documents.
std::string class_label(int index);

// columns: class,precision,recall,f1,specificity,fpr,accuracy; final row is
// the unweighted average.
void write_metrics_csv(const ClassMetrics& metrics, std::ostream& out);
void write_confusion_csv(const ConfusionMatrix& matrix, std::ostream& out);

}  // namespace posevit
