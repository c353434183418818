#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posevit/image.hpp"

namespace posevit {

// The three fixed camera positions; each view trains its own network.
enum class View { dashboard, rearview, rightside };

inline constexpr std::array<View, 3> kAllViews{View::dashboard, View::rearview,
                                               View::rightside};

std::string to_string(View view);
View view_from_string(const std::string& name);  // FormatError on unknown names

struct LabeledSample {
  Image image;
  int class_index = 0;
  View view = View::dashboard;
};

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
};

// Seeded Fisher-Yates shuffle, then fixed-ratio partition:
// floor(0.15 n) validation, floor(0.15 n) test, remainder training.
// Requires at least 3 samples so every part can be nonempty.
DatasetSplit split_dataset(std::vector<LabeledSample> samples, std::uint64_t seed);

// Dataset root layout: {view}/{class}/{sample}.ppm with a sibling
// {sample}.landmarks.json, indexed by manifest.tsv with one
// "path<TAB>view<TAB>class" record per line.
inline constexpr const char* kManifestName = "manifest.tsv";

struct ManifestEntry {
  std::string path;  // relative to the dataset root
  View view = View::dashboard;
  int class_index = 0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root,
                    const std::vector<ManifestEntry>& entries);

// Loads the referenced images, optionally keeping a single view, optionally
// resizing every sample to a square edge.
std::vector<LabeledSample> load_samples(const std::filesystem::path& root,
                                        const std::vector<ManifestEntry>& entries,
                                        std::optional<View> only_view = {},
                                        int resize_edge = 0);

}  // namespace posevit
