#pragma once

#include <array>
#include <string>
#include <vector>

#include "fundusda/dataset.hpp"
#include "fundusda/image.hpp"
#include "fundusda/labels.hpp"

namespace fundusda {

// Synthetic two-domain dataset. Source: circular fundus-like disc on a dark
// background with one colored blob style per lesion class. Target: same
// lesion semantics inside an elliptical field of view, a global color shift,
// and eyelash/eyelid occluders at the border.
struct FixtureConfig {
  int resolution = 128;
  // Images whose primary lesion is class c; multi-label images are formed by
  // merging two primaries, so per-class positive counts stay exact.
  std::array<int, kNumClasses> source_counts = {61, 29, 14, 11, 3};
  std::array<int, kNumClasses> target_counts = {13, 4, 8, 3, 3};
  int source_normals = 16;
  int target_normals = 3;
  double multi_label_prob = 0.30;
  int min_occluders = 6;
  int max_occluders = 11;

  // Per-class counts proportional to the production dataset statistics.
  static FixtureConfig scaled(double scale, int resolution);
};

struct LesionSpec {
  int class_index = 0;
  double cy = 0, cx = 0, radius = 0;
};

struct FixtureImageMeta {
  std::string image_id;
  Domain domain = Domain::source;
  LabelVector label = zero_label();
  std::vector<LesionSpec> lesions;
  double fov_ry = 0, fov_rx = 0;  // target field-of-view ellipse, 0 for source
};

struct FixtureResult {
  DatasetIndex index;
  std::vector<FixtureImageMeta> metas;
  std::string dir;
};

// Writes images/<id>.png, occluder ground truth gt/<id>_occ.png for target
// images, manifest.csv and meta.json under out_dir.
FixtureResult synthesize_fixture(const FixtureConfig& config, uint64_t seed,
                                 const std::string& out_dir);

// Lesion color oracle. Signature colors are the blob paint colors; target
// style accounts for the fixture's global color shift.
std::array<Color, kNumClasses> source_signatures();
std::array<Color, kNumClasses> target_signatures();
Color apply_target_shift(const Color& c);

// Connected blob components per class whose core color matches the class
// signature, scanned inside the central field region only (borders and
// occluders excluded). min_area in pixels; 0 picks a resolution-scaled value.
std::array<int, kNumClasses> count_lesion_blobs(const ImageGrid& img,
                                                bool target_style,
                                                double tolerance = 0.13,
                                                int min_area = 0);

std::array<bool, kNumClasses> detect_lesions(const ImageGrid& img,
                                             bool target_style,
                                             double tolerance = 0.13);

void save_fixture_meta(const std::string& path,
                       const std::vector<FixtureImageMeta>& metas);
std::vector<FixtureImageMeta> load_fixture_meta(const std::string& path);

}  // namespace fundusda
