#include "posevit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "posevit/error.hpp"
#include "posevit/metrics.hpp"

namespace posevit {

namespace {

constexpr double kMassTolerance = 1e-9;

}  // namespace

ClassDistribution ClassDistribution::from_probabilities(std::vector<double> probabilities) {
  if (probabilities.empty()) {
    throw ContractError("class distribution must have at least one class");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!std::isfinite(p) || p < 0.0) {
      throw ContractError("class distribution entry " + std::to_string(i) +
                          " must be finite and non-negative");
    }
    mass += p;
  }
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw ContractError("class distribution mass is " + std::to_string(mass) +
                        ", expected 1 within 1e-9");
  }
  ClassDistribution dist;
  dist.probabilities = std::move(probabilities);
  return dist;
}

double ClassDistribution::peak() const {
  if (probabilities.empty()) {
    throw ContractError("peak of an empty distribution");
  }
  return *std::max_element(probabilities.begin(), probabilities.end());
}

int ClassDistribution::argmax() const {
  if (probabilities.empty()) {
    throw ContractError("argmax of an empty distribution");
  }
  // max_element keeps the first of equal maxima, i.e. the lowest class index.
  return static_cast<int>(std::max_element(probabilities.begin(), probabilities.end()) -
                          probabilities.begin());
}

void validate(const FusionConfig& config) {
  if (!std::isfinite(config.threshold) || config.threshold < 0.0 || config.threshold > 1.0) {
    throw ConfigError("fusion threshold must lie in [0, 1]");
  }
}

FusionResult fuse(const std::vector<ViewPrediction>& predictions, const FusionConfig& config) {
  validate(config);
  if (predictions.size() != 3) {
    throw ContractError("fusion requires exactly 3 view predictions, got " +
                        std::to_string(predictions.size()));
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = i + 1; j < predictions.size(); ++j) {
      if (predictions[i].view == predictions[j].view) {
        throw ContractError("fusion requires three distinct views; \"" +
                            to_string(predictions[i].view) + "\" appears more than once");
      }
    }
  }
  const int k = predictions.front().distribution.num_classes();
  for (const ViewPrediction& p : predictions) {
    if (p.distribution.num_classes() != k) {
      throw ContractError("all fused distributions must have the same class count");
    }
  }

  // Elect views whose peak reaches the threshold; fall back to all views.
  std::vector<const ViewPrediction*> elected;
  for (const ViewPrediction& p : predictions) {
    if (p.distribution.peak() >= config.threshold) {
      elected.push_back(&p);
    }
  }
  FusionResult result;
  if (elected.empty()) {
    for (const ViewPrediction& p : predictions) {
      elected.push_back(&p);
    }
    result.fallback_used = true;
  }

  std::vector<double> average(static_cast<std::size_t>(k), 0.0);
  for (const ViewPrediction* p : elected) {
    for (int c = 0; c < k; ++c) {
      average[static_cast<std::size_t>(c)] +=
          p->distribution.probabilities[static_cast<std::size_t>(c)];
    }
  }
  for (double& v : average) {
    v /= static_cast<double>(elected.size());
  }

  int best = 0;
  for (int c = 1; c < k; ++c) {
    if (average[static_cast<std::size_t>(c)] > average[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  result.class_index = best;
  result.fused_probability = average[static_cast<std::size_t>(best)];
  for (View view : kAllViews) {
    for (const ViewPrediction* p : elected) {
      if (p->view == view) {
        result.contributing_views.push_back(view);
        break;
      }
    }
  }
  return result;
}

std::string write_distribution_document(const ViewPrediction& prediction) {
  nlohmann::json doc;
  doc["view"] = to_string(prediction.view);
  doc["probabilities"] = prediction.distribution.probabilities;
  return doc.dump(2) + "\n";
}

ViewPrediction parse_distribution_document(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("distribution document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw FormatError("distribution document must be a JSON object");
  }
  if (!doc.contains("view") || !doc["view"].is_string()) {
    throw FormatError("distribution document needs a string \"view\" field");
  }
  if (!doc.contains("probabilities") || !doc["probabilities"].is_array()) {
    throw FormatError("distribution document needs a \"probabilities\" array");
  }
  ViewPrediction prediction;
  prediction.view = view_from_string(doc["view"].get<std::string>());
  std::vector<double> probs;
  for (const auto& entry : doc["probabilities"]) {
    if (!entry.is_number()) {
      throw FormatError("\"probabilities\" entries must be numbers");
    }
    probs.push_back(entry.get<double>());
  }
  try {
    prediction.distribution = ClassDistribution::from_probabilities(std::move(probs));
  } catch (const ContractError& e) {
    throw FormatError(std::string("distribution document rejected: ") + e.what());
  }
  return prediction;
}

ViewPrediction read_distribution_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open distribution document " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_distribution_document(buffer.str());
}

void write_distribution_file(const std::filesystem::path& path,
                             const ViewPrediction& prediction) {
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write distribution document " + path.string());
  }
  out << write_distribution_document(prediction);
  if (!out) {
    throw FormatError("failed writing distribution document " + path.string());
  }
}

std::string write_fusion_document(const FusionResult& result, int num_classes) {
  if (result.class_index < 0 || result.class_index >= num_classes) {
    throw ContractError("fusion document class index out of range");
  }
  nlohmann::json doc;
  doc["class_index"] = result.class_index;
  doc["class_label"] = class_label(result.class_index);
  doc["fused_probability"] = result.fused_probability;
  std::vector<std::string> views;
  for (View view : result.contributing_views) {
    views.push_back(to_string(view));
  }
  doc["contributing_views"] = views;
  doc["fallback_used"] = result.fallback_used;
  return doc.dump(2) + "\n";
}

}  // namespace posevit
