#include "fundusda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fundusda/image_io.hpp"
#include "fundusda/rng.hpp"

namespace fundusda {

std::string domain_to_string(Domain d) {
  switch (d) {
    case Domain::source: return "source";
    case Domain::target: return "target";
    case Domain::pseudo_target: return "pseudo_target";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::source;
  if (s == "target") return Domain::target;
  if (s == "pseudo_target") return Domain::pseudo_target;
  throw std::invalid_argument("unknown domain: " + s);
}

std::string split_to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "";
}

Split split_from_string(const std::string& s) {
  if (s.empty()) return Split::unassigned;
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + s);
}

std::vector<const DatasetRecord*> DatasetIndex::select(Domain domain) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records)
    if (r.domain == domain) out.push_back(&r);
  return out;
}

std::vector<const DatasetRecord*> DatasetIndex::select(Domain domain,
                                                       Split split) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records)
    if (r.domain == domain && r.split == split) out.push_back(&r);
  return out;
}

size_t DatasetIndex::count(Domain domain, Split split) const {
  return select(domain, split).size();
}

// ---------------------------------------------------------------------------
// Manifest I/O

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void manifest_error(const std::string& path, int line,
                                 const std::string& what) {
  throw std::runtime_error("manifest " + path + ":" + std::to_string(line) +
                           ": " + what);
}

}  // namespace

DatasetIndex load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest file not found: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("manifest is empty: " + path);
  auto header = split_csv_line(line);
  const std::vector<std::string> base = {"image_id", "path",  "domain",
                                         "labels",   "split", "fold"};
  bool has_gen = false;
  if (header.size() == 7 && header[6] == "generator_index") {
    has_gen = true;
  } else if (header.size() != 6) {
    manifest_error(path, 1, "bad header, expected image_id,path,domain,labels,split,fold");
  }
  for (size_t i = 0; i < 6; ++i)
    if (header[i] != base[i])
      manifest_error(path, 1, "bad header column " + std::to_string(i + 1) +
                                  ": " + header[i]);

  DatasetIndex index;
  std::map<std::string, int> seen;  // image_id -> first line
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != (has_gen ? 7u : 6u))
      manifest_error(path, lineno,
                     "expected " + std::to_string(has_gen ? 7 : 6) +
                         " fields, got " + std::to_string(f.size()));
    DatasetRecord r;
    r.image_id = f[0];
    if (r.image_id.empty()) manifest_error(path, lineno, "empty image_id");
    auto it = seen.find(r.image_id);
    if (it != seen.end())
      manifest_error(path, lineno,
                     "duplicate image_id '" + r.image_id + "' (first at line " +
                         std::to_string(it->second) + ")");
    seen[r.image_id] = lineno;
    r.path = f[1];
    try {
      r.domain = domain_from_string(f[2]);
    } catch (const std::exception& e) {
      manifest_error(path, lineno, e.what());
    }
    if (f[3] == "?") {
      r.label = std::nullopt;
    } else {
      try {
        r.label = label_from_string(f[3]);
      } catch (const std::exception& e) {
        manifest_error(path, lineno, e.what());
      }
    }
    try {
      r.split = split_from_string(f[4]);
    } catch (const std::exception& e) {
      manifest_error(path, lineno, e.what());
    }
    if (!f[5].empty()) {
      try {
        r.fold = std::stoi(f[5]);
      } catch (const std::exception&) {
        manifest_error(path, lineno, "bad fold: " + f[5]);
      }
    }
    if (has_gen && !f[6].empty()) {
      try {
        r.generator_index = std::stoi(f[6]);
      } catch (const std::exception&) {
        manifest_error(path, lineno, "bad generator_index: " + f[6]);
      }
    }
    if (r.domain == Domain::pseudo_target && !r.generator_index)
      manifest_error(path, lineno, "pseudo_target record missing generator_index");
    if (r.domain != Domain::pseudo_target && r.generator_index)
      manifest_error(path, lineno, "generator_index on non-pseudo record");
    index.records.push_back(std::move(r));
  }
  return index;
}

void save_manifest(const std::string& path, const DatasetIndex& index) {
  bool has_gen = false;
  for (const auto& r : index.records)
    if (r.generator_index) has_gen = true;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "image_id,path,domain,labels,split,fold";
  if (has_gen) out << ",generator_index";
  out << "\n";
  for (const auto& r : index.records) {
    out << r.image_id << ',' << r.path << ',' << domain_to_string(r.domain)
        << ',';
    if (!r.label)
      out << '?';
    else
      out << label_to_string(*r.label);
    out << ',' << split_to_string(r.split) << ',';
    if (r.fold) out << *r.fold;
    if (has_gen) {
      out << ',';
      if (r.generator_index) out << *r.generator_index;
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

// Largest-remainder apportionment of n into 3 parts.
std::array<int, 3> apportion(int n, const SplitRatios& ratios) {
  const double want[3] = {n * ratios.train, n * ratios.val, n * ratios.test};
  std::array<int, 3> got{static_cast<int>(want[0]), static_cast<int>(want[1]),
                         static_cast<int>(want[2])};
  int assigned = got[0] + got[1] + got[2];
  std::array<double, 3> rem{want[0] - got[0], want[1] - got[1],
                            want[2] - got[2]};
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best]) best = i;
    ++got[best];
    rem[best] = -1;
    ++assigned;
  }
  return got;
}

}  // namespace

DatasetIndex split_dataset(const DatasetIndex& index, const SplitRatios& ratios,
                           uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  if (index.records.size() < 4)
    throw std::invalid_argument("split_dataset: fewer than 4 records");
  for (const auto& r : index.records)
    if (r.split != Split::unassigned)
      throw std::invalid_argument("split_dataset: record '" + r.image_id +
                                  "' already split");

  DatasetIndex out = index;
  Rng rng(derive_seed(seed, "split_dataset"));

  for (Domain domain : {Domain::source, Domain::target, Domain::pseudo_target}) {
    std::vector<int> members;
    for (size_t i = 0; i < out.records.size(); ++i)
      if (out.records[i].domain == domain) members.push_back(static_cast<int>(i));
    if (members.empty()) continue;

    const auto targets = apportion(static_cast<int>(members.size()), ratios);
    std::array<int, 3> filled{0, 0, 0};
    std::vector<char> assigned(out.records.size(), 0);

    // Positive count per class in this domain.
    std::array<int, kNumClasses> positives{};
    for (int idx : members) {
      const auto& lab = out.records[idx].label;
      if (!lab) continue;
      for (int c = 0; c < kNumClasses; ++c)
        if ((*lab)[c] > 0.5) ++positives[c];
    }
    std::vector<int> class_order;
    for (int c = 0; c < kNumClasses; ++c)
      if (positives[c] > 0) class_order.push_back(c);
    std::sort(class_order.begin(), class_order.end(),
              [&](int a, int b) {
                return positives[a] != positives[b] ? positives[a] < positives[b]
                                                    : a < b;
              });

    auto deficit_split = [&](void) {
      // Split with the largest remaining quota.
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (targets[s] - filled[s] > targets[best] - filled[best]) best = s;
      return best;
    };

    for (int c : class_order) {
      std::vector<int> group;
      for (int idx : members)
        if (!assigned[idx] && out.records[idx].label &&
            (*out.records[idx].label)[c] > 0.5)
          group.push_back(idx);
      if (group.empty()) continue;
      rng.shuffle(group);
      size_t gi = 0;
      // A class with >= 3 positives must reach every split.
      if (positives[c] >= 3 && group.size() >= 3) {
        for (int s = 0; s < 3 && gi < group.size(); ++s) {
          out.records[group[gi]].split =
              s == 0 ? Split::train : (s == 1 ? Split::val : Split::test);
          assigned[group[gi]] = 1;
          ++filled[s];
          ++gi;
        }
      }
      for (; gi < group.size(); ++gi) {
        const int s = deficit_split();
        out.records[group[gi]].split =
            s == 0 ? Split::train : (s == 1 ? Split::val : Split::test);
        assigned[group[gi]] = 1;
        ++filled[s];
      }
    }

    // Remaining records (Normals and unlabeled) rebalance toward the quotas.
    std::vector<int> rest;
    for (int idx : members)
      if (!assigned[idx]) rest.push_back(idx);
    rng.shuffle(rest);
    for (int idx : rest) {
      const int s = deficit_split();
      out.records[idx].split =
          s == 0 ? Split::train : (s == 1 ? Split::val : Split::test);
      assigned[idx] = 1;
      ++filled[s];
    }
  }
  return out;
}

DatasetIndex make_kfold(const DatasetIndex& index, int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_kfold: k must be >= 2");
  if (static_cast<size_t>(k) > index.records.size())
    throw std::invalid_argument("make_kfold: k exceeds record count");
  DatasetIndex out = index;
  Rng rng(derive_seed(seed, "make_kfold"));
  std::vector<int> order(out.records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  for (size_t i = 0; i < order.size(); ++i)
    out.records[order[i]].fold = static_cast<int>(i % k);
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

ImageGrid augment(const ImageGrid& image, uint64_t seed) {
  Rng rng(derive_seed(seed, "augment"));
  ImageGrid out = image;

  if (rng.coin(0.5)) out = flip_horizontal(out);

  // Crop-and-resize keeping >= 90% of the area.
  const double area_keep = rng.uniform(0.90, 1.0);
  const double lin = std::sqrt(area_keep);
  const int ch = std::max(1, static_cast<int>(std::lround(image.height * lin)));
  const int cw = std::max(1, static_cast<int>(std::lround(image.width * lin)));
  const int y0 = rng.randint(0, image.height - ch + 1);
  const int x0 = rng.randint(0, image.width - cw + 1);
  out = crop(out, y0, x0, ch, cw);
  out = resize_bilinear(out, image.height, image.width);

  const double gain = rng.uniform(0.9, 1.1);
  scale_brightness(out, gain);
  return out;
}

LabeledSet load_labeled(const DatasetIndex& index, Domain domain, Split split,
                        int resolution, const std::string& root_dir) {
  LabeledSet set;
  for (const auto& r : index.records) {
    if (r.domain != domain || r.split != split) continue;
    if (!r.label)
      throw std::runtime_error("record '" + r.image_id + "' is unlabeled");
    std::filesystem::path p(r.path);
    if (p.is_relative() && !root_dir.empty())
      p = std::filesystem::path(root_dir) / p;
    ImageGrid img = read_png(p.string());
    if (resolution > 0 &&
        (img.height != resolution || img.width != resolution))
      img = resize_bilinear(img, resolution, resolution);
    set.images.push_back(std::move(img));
    set.labels.push_back(*r.label);
    set.ids.push_back(r.image_id);
  }
  return set;
}

}  // namespace fundusda
