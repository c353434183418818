#pragma once

#include <vector>

namespace posevit {

// Probability distribution over action classes: entries nonnegative,
// summing to 1 within 1e-9.
struct ClassDistribution {
  std::vector<double> probabilities;

  static ClassDistribution from_probabilities(std::vector<double> probabilities);

  int num_classes() const { return static_cast<int>(probabilities.size()); }
  double peak() const;   // highest probability
  int argmax() const;    // ties resolve to the lowest index
};

}  // namespace posevit
