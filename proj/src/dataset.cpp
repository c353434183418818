#include "posevit/dataset.hpp"

#include <fstream>

#include "posevit/error.hpp"
#include "posevit/rng.hpp"

namespace posevit {

std::string to_string(View view) {
  switch (view) {
    case View::dashboard: return "dashboard";
    case View::rearview: return "rearview";
    case View::rightside: return "rightside";
  }
  throw ContractError("view: invalid enum value");
}

View view_from_string(const std::string& name) {
  for (const View v : kAllViews) {
    if (to_string(v) == name) return v;
  }
  throw FormatError("view: unknown name \"" + name + "\"");
}

DatasetSplit split_dataset(std::vector<LabeledSample> samples, std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n < 3) {
    throw ContractError("split: at least 3 samples required");
  }
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(samples[i], samples[j]);
  }
  const std::size_t n_val = static_cast<std::size_t>(0.15 * static_cast<double>(n));
  const std::size_t n_test = n_val;
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.train.assign(samples.begin(), samples.begin() + n_train);
  split.validation.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
  split.test.assign(samples.begin() + n_train + n_val, samples.end());
  return split;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
  const std::filesystem::path path = root / kManifestName;
  std::ifstream in(path);
  if (!in) throw FormatError("manifest: cannot open " + path.string());

  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                       : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw FormatError("manifest: line " + std::to_string(line_no) +
                        " is not path<TAB>view<TAB>class");
    }
    ManifestEntry entry;
    entry.path = line.substr(0, tab1);
    entry.view = view_from_string(line.substr(tab1 + 1, tab2 - tab1 - 1));
    try {
      entry.class_index = std::stoi(line.substr(tab2 + 1));
    } catch (const std::exception&) {
      throw FormatError("manifest: line " + std::to_string(line_no) +
                        " has a non-integer class");
    }
    if (entry.class_index < 0) {
      throw FormatError("manifest: line " + std::to_string(line_no) +
                        " has a negative class");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& root,
                    const std::vector<ManifestEntry>& entries) {
  const std::filesystem::path path = root / kManifestName;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("manifest: cannot open " + path.string() + " for writing");
  for (const ManifestEntry& e : entries) {
    out << e.path << '\t' << to_string(e.view) << '\t' << e.class_index << '\n';
  }
  if (!out) throw FormatError("manifest: write failed for " + path.string());
}

std::vector<LabeledSample> load_samples(const std::filesystem::path& root,
                                        const std::vector<ManifestEntry>& entries,
                                        std::optional<View> only_view,
                                        int resize_edge) {
  std::vector<LabeledSample> samples;
  for (const ManifestEntry& e : entries) {
    if (only_view.has_value() && e.view != *only_view) continue;
    LabeledSample s;
    s.image = read_ppm_file((root / e.path).string());
    if (resize_edge > 0 &&
        (s.image.height != resize_edge || s.image.width != resize_edge)) {
      s.image = resize_bilinear(s.image, resize_edge, resize_edge);
    }
    s.class_index = e.class_index;
    s.view = e.view;
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace posevit
