#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fundusda/image.hpp"
#include "fundusda/labels.hpp"

namespace fundusda {

enum class Domain { source, target, pseudo_target };
enum class Split { unassigned, train, val, test };

std::string domain_to_string(Domain d);
Domain domain_from_string(const std::string& s);
std::string split_to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetRecord {
  std::string image_id;
  std::string path;
  Domain domain = Domain::source;
  std::optional<LabelVector> label;  // absent = unlabeled ("?")
  Split split = Split::unassigned;
  std::optional<int> fold;
  std::optional<int> generator_index;  // pseudo_target records only
};

struct DatasetIndex {
  std::vector<DatasetRecord> records;

  std::vector<const DatasetRecord*> select(Domain domain) const;
  std::vector<const DatasetRecord*> select(Domain domain, Split split) const;
  size_t count(Domain domain, Split split) const;
};

// Manifest CSV: header `image_id,path,domain,labels,split,fold`; `labels` is
// `;`-joined class names, empty for Normal, `?` for unlabeled. A trailing
// `generator_index` column is written only when pseudo_target records are
// present and accepted on load.
DatasetIndex load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetIndex& index);

struct SplitRatios {
  double train = 0.5;
  double val = 0.25;
  double test = 0.25;
};

// Per-domain stratified split, rarest class first. Deterministic per seed.
// Every class with >= 3 positives in a domain lands in all three splits.
DatasetIndex split_dataset(const DatasetIndex& index, const SplitRatios& ratios,
                           uint64_t seed);

// Assigns fold in [0, k) to every record; fold sizes differ by at most one.
DatasetIndex make_kfold(const DatasetIndex& index, int k, uint64_t seed);

// Stochastic label-preserving augmentation: horizontal flip (p = 0.5),
// crop-and-resize keeping >= 90% area, brightness jitter within +-10%.
ImageGrid augment(const ImageGrid& image, uint64_t seed);

// In-memory labeled subset materialized from an index.
struct LabeledSet {
  std::vector<ImageGrid> images;
  std::vector<LabelVector> labels;
  std::vector<std::string> ids;

  size_t size() const { return images.size(); }
};

// Loads records of one domain+split, resized to `resolution` when positive.
// Throws if a selected record is unlabeled.
LabeledSet load_labeled(const DatasetIndex& index, Domain domain, Split split,
                        int resolution, const std::string& root_dir = "");

}  // namespace fundusda
