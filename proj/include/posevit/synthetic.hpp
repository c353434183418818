#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "posevit/dataset.hpp"
#include "posevit/image.hpp"
#include "posevit/landmarks.hpp"
#include "posevit/rng.hpp"

namespace posevit {

// Synthetic labeled poses: each class owns a canonical 25-landmark template
// (classes differ by where the acting wrist and its hand cluster sit), each
// view applies a fixed similarity transform, and each sample jitters the
// normalized coordinates with Gaussian noise. Per-sample seeds derive from
// (seed, view, class, index), so generation is order-independent and
// reproducible bit for bit.
struct SyntheticConfig {
  int num_classes = 16;
  int per_class = 8;  // samples per (class, view) pair
  std::uint64_t seed = 0;
  int canvas_size = 224;  // render/composite resolution
  int image_size = 224;   // stored sample edge after resizing
  double jitter_sigma = 0.01;
  SkeletonStyle style{};
};

struct SyntheticSample {
  LabeledSample sample;
  LandmarkSet landmarks;  // jittered pose at canvas resolution
};

// Canonical pose for one class, normalized coordinates.
LandmarkSet pose_template(int class_index, int num_classes);

// Template after the view's similarity transform (scale/rotate/shift about
// the canvas center).
LandmarkSet view_pose(int class_index, int num_classes, View view);

LandmarkSet jitter_pose(const LandmarkSet& pose, double sigma, SplitMix64& rng);

// Seeded non-black texture: banded gradient, a few soft rectangles, and
// per-pixel speckle.
Image textured_background(int height, int width, SplitMix64& rng);

// All three views, ordered (view, class, sample index). Total size is
// 3 * num_classes * per_class.
std::vector<SyntheticSample> gen_synthetic_dataset(const SyntheticConfig& config);

// Writes {view}/{class}/{sample}.ppm, sibling landmark documents and the
// manifest under root, creating directories as needed.
void write_dataset(const std::filesystem::path& root,
                   const std::vector<SyntheticSample>& samples);

}  // namespace posevit
