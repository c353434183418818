#pragma once

#include <filesystem>
#include <vector>

#include "posevit/dataset.hpp"
#include "posevit/distribution.hpp"

namespace posevit {

struct ViewPrediction {
  View view = View::dashboard;
  ClassDistribution distribution;
};

struct FusionConfig {
  double threshold = 0.5;
};

void validate(const FusionConfig& config);

struct FusionResult {
  int class_index = 0;
  double fused_probability = 0.0;
  std::vector<View> contributing_views;  // canonical view order
  bool fallback_used = false;
};

// Confidence-gated late fusion over exactly three distinct views:
// views whose peak probability reaches the threshold are elected; if none
// qualify, every view contributes and the fallback flag is set. The elected
// views' full distributions are averaged element-wise, and the answer is the
// argmax of that average (ties resolve to the lowest class index) together
// with the averaged probability at that argmax.
FusionResult fuse(const std::vector<ViewPrediction>& predictions,
                  const FusionConfig& config = {});

// JSON document shuttling one view's distribution between processes.
std::string write_distribution_document(const ViewPrediction& prediction);
ViewPrediction parse_distribution_document(const std::string& text);
ViewPrediction read_distribution_file(const std::filesystem::path& path);
void write_distribution_file(const std::filesystem::path& path,
                             const ViewPrediction& prediction);

// JSON document for a fused decision.
std::string write_fusion_document(const FusionResult& result, int num_classes);

}  // namespace posevit
