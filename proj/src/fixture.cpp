#include "fundusda/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fundusda/image_io.hpp"
#include "fundusda/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fundusda {

namespace {

// Production per-class statistics the scaled config is proportioned to.
constexpr std::array<int, kNumClasses> kSourceLesionStats = {3047, 1472, 679,
                                                             560, 60};
constexpr std::array<int, kNumClasses> kTargetLesionStats = {648, 198, 393,
                                                             143, 134};
constexpr int kSourceNormalStat = 800;
constexpr int kTargetNormalStat = 122;

constexpr Color kSourceBackground = {0.03, 0.03, 0.03};
constexpr Color kFundusBase = {0.78, 0.44, 0.20};
constexpr Color kOpticDisc = {0.92, 0.62, 0.35};
constexpr Color kLashColor = {0.20, 0.14, 0.10};
constexpr Color kLidColor = {0.48, 0.34, 0.28};

// Global target-domain color transform: out = mult * c + add.
constexpr Color kShiftMult = {0.62, 0.82, 1.00};
constexpr Color kShiftAdd = {0.00, 0.03, 0.08};

const std::array<Color, kNumClasses>& raw_signatures() {
  static const std::array<Color, kNumClasses> sigs = {{
      {0.55, 0.07, 0.07},  // hemorrhage: dark red blob
      {0.86, 0.76, 0.16},  // drusen: yellow dot cluster
      {0.98, 0.96, 0.50},  // hard exudation: bright yellow patch
      {0.88, 0.90, 0.92},  // soft exudation: fuzzy white patch
      {0.05, 0.00, 0.22},  // retinal hole: dark violet ring
  }};
  return sigs;
}

double color_dist(const Color& a, const Color& b) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Color jitter_color(const Color& c, Rng& rng, double amount) {
  Color out = c;
  for (auto& v : out)
    v = std::clamp(v + rng.uniform(-amount, amount), 0.0, 1.0);
  return out;
}

void add_noise(ImageGrid& img, Rng& rng, double sigma) {
  for (auto& v : img.pixels) v = std::clamp(v + rng.gauss() * sigma, 0.0, 1.0);
}

void shift_to_target(ImageGrid& img) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) =
            std::clamp(img.at(y, x, c) * kShiftMult[c] + kShiftAdd[c], 0.0, 1.0);
}

struct LesionPlacement {
  double cy, cx, r;
};

// Lesion centers stay inside an ellipse small enough that both the source
// disc and the target field of view contain the full blob.
LesionPlacement place_lesion(Rng& rng, int res,
                             const std::vector<LesionPlacement>& existing,
                             double radius) {
  const double cy0 = res / 2.0, cx0 = res / 2.0;
  const double ry = 0.20 * res, rx = 0.28 * res;
  const double min_sep = 0.22 * res;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double a = rng.uniform(0, 2 * M_PI);
    const double t = std::sqrt(rng.uniform());
    const double cy = cy0 + t * ry * std::sin(a);
    const double cx = cx0 + t * rx * std::cos(a);
    bool ok = true;
    for (const auto& e : existing)
      if (std::hypot(cy - e.cy, cx - e.cx) < min_sep) ok = false;
    if (ok) return {cy, cx, radius};
  }
  return {cy0, cx0, radius};  // crowded image, overlap allowed
}

void draw_lesion(ImageGrid& img, int class_index, const LesionPlacement& p,
                 Rng& rng) {
  const Color base = jitter_color(raw_signatures()[class_index], rng, 0.02);
  switch (class_index) {
    case 0: {  // hemorrhage: union of overlapping circles
      const int parts = rng.randint(2, 4);
      for (int i = 0; i < parts; ++i) {
        const double dy = rng.uniform(-0.4, 0.4) * p.r;
        const double dx = rng.uniform(-0.4, 0.4) * p.r;
        fill_circle(img, p.cy + dy, p.cx + dx, p.r * rng.uniform(0.55, 0.8),
                    base);
      }
      break;
    }
    case 1: {  // drusen: chain of overlapping dots
      const int dots = rng.randint(4, 8);
      double y = p.cy - p.r * 0.6, x = p.cx - p.r * 0.6;
      const double dot_r = std::max(2.2, p.r * 0.30);
      for (int i = 0; i < dots; ++i) {
        fill_circle(img, y, x, dot_r, base);
        y += rng.uniform(0.6, 1.4) * dot_r;
        x += rng.uniform(0.2, 1.4) * dot_r;
      }
      break;
    }
    case 2:  // hard exudation: sharp bright patch
      fill_circle(img, p.cy, p.cx, p.r, base);
      break;
    case 3:  // soft exudation: feathered patch
      fill_soft_blob(img, p.cy, p.cx, p.r * 0.7, p.r * 0.35, base);
      break;
    case 4: {  // retinal hole: dark ring
      const double thick = std::max(2.5, p.r * 0.35);
      fill_ring(img, p.cy, p.cx, p.r, std::max(1.0, p.r - thick), base);
      break;
    }
    default:
      throw std::logic_error("bad class index");
  }
}

struct RenderedImage {
  ImageGrid image;
  BinaryMask occluders;  // target only
  FixtureImageMeta meta;
};

RenderedImage render_image(int res, Domain domain, const LabelVector& label,
                           Rng& rng, const FixtureConfig& cfg) {
  RenderedImage out;
  out.image = ImageGrid(res, res, 3);
  out.meta.domain = domain;
  out.meta.label = label;
  const double cy = res / 2.0 + rng.uniform(-0.01, 0.01) * res;
  const double cx = res / 2.0 + rng.uniform(-0.01, 0.01) * res;

  // Background.
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x)
      for (int c = 0; c < 3; ++c)
        out.image.at(y, x, c) = kSourceBackground[c];

  // Fundus field: disc for source, ellipse for target.
  const Color fundus = jitter_color(kFundusBase, rng, 0.05);
  double fov_ry, fov_rx;
  if (domain == Domain::source) {
    fov_ry = fov_rx = rng.uniform(0.42, 0.47) * res;
  } else {
    fov_ry = rng.uniform(0.34, 0.38) * res;
    fov_rx = rng.uniform(0.44, 0.48) * res;
  }
  fill_ellipse(out.image, cy, cx, fov_ry, fov_rx, fundus);
  out.meta.fov_ry = fov_ry;
  out.meta.fov_rx = fov_rx;

  // Occasional optic-disc-like bright spot (not a lesion).
  if (rng.coin(0.6)) {
    const double a = rng.uniform(0, 2 * M_PI);
    fill_circle(out.image, cy + 0.16 * res * std::sin(a),
                cx + 0.22 * res * std::cos(a), rng.uniform(0.04, 0.06) * res,
                jitter_color(kOpticDisc, rng, 0.03));
  }

  // Lesions.
  std::vector<LesionPlacement> placed;
  for (int c = 0; c < kNumClasses; ++c) {
    if (label[c] < 0.5) continue;
    const double r = rng.uniform(0.05, 0.07) * res;
    LesionPlacement p = place_lesion(rng, res, placed, r);
    placed.push_back(p);
    draw_lesion(out.image, c, p, rng);
    out.meta.lesions.push_back({c, p.cy, p.cx, p.r});
  }

  add_noise(out.image, rng, 0.012);

  if (domain == Domain::target) {
    shift_to_target(out.image);

    // Occluders: eyelash strokes and eyelid arcs, painted only outside a
    // safety margin of the field of view.
    ImageGrid overlay = out.image;
    BinaryMask touched(res, res);
    const int n_lashes = rng.randint(cfg.min_occluders, cfg.max_occluders + 1);
    for (int i = 0; i < n_lashes; ++i) {
      const bool top = rng.coin(0.5);
      const double x0 = rng.uniform(0.05, 0.95) * res;
      const double y0 = top ? rng.uniform(0.0, 0.04) * res
                            : rng.uniform(0.96, 1.0) * res;
      const double x1 = x0 + rng.uniform(-0.18, 0.18) * res;
      const double y1 =
          top ? y0 + rng.uniform(0.08, 0.22) * res : y0 - rng.uniform(0.08, 0.22) * res;
      draw_stroke_tracked(overlay, touched, y0, x0, y1, x1,
                          rng.uniform(1.5, 3.0),
                          jitter_color(kLashColor, rng, 0.04));
    }
    if (rng.coin(0.7)) {  // eyelid arc hugging one border
      const bool top = rng.coin(0.5);
      const double arc_cy = top ? -0.55 * res : 1.55 * res;
      fill_circle_tracked(overlay, touched, arc_cy, cx, 0.62 * res,
                          jitter_color(kLidColor, rng, 0.04));
    }
    // Composite with the safety guard.
    out.occluders = BinaryMask(res, res);
    const double guard_ry = fov_ry - 2.0, guard_rx = fov_rx - 2.0;
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        if (!touched.at(y, x)) continue;
        const double dy = (y - cy) / guard_ry, dx = (x - cx) / guard_rx;
        if (dy * dy + dx * dx <= 1.0) continue;  // inside field: keep fundus
        for (int c = 0; c < 3; ++c)
          out.image.at(y, x, c) = overlay.at(y, x, c);
        out.occluders.at(y, x) = 1;
      }
  }
  return out;
}

}  // namespace

FixtureConfig FixtureConfig::scaled(double scale, int resolution) {
  FixtureConfig cfg;
  cfg.resolution = resolution;
  for (int c = 0; c < kNumClasses; ++c) {
    cfg.source_counts[c] =
        static_cast<int>(std::lround(kSourceLesionStats[c] * scale));
    cfg.target_counts[c] =
        static_cast<int>(std::lround(kTargetLesionStats[c] * scale));
  }
  cfg.source_normals = static_cast<int>(std::lround(kSourceNormalStat * scale));
  cfg.target_normals = static_cast<int>(std::lround(kTargetNormalStat * scale));
  return cfg;
}

std::array<Color, kNumClasses> source_signatures() { return raw_signatures(); }

Color apply_target_shift(const Color& c) {
  Color out;
  for (int i = 0; i < 3; ++i)
    out[i] = std::clamp(c[i] * kShiftMult[i] + kShiftAdd[i], 0.0, 1.0);
  return out;
}

std::array<Color, kNumClasses> target_signatures() {
  std::array<Color, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c)
    out[c] = apply_target_shift(raw_signatures()[c]);
  return out;
}

FixtureResult synthesize_fixture(const FixtureConfig& config, uint64_t seed,
                                 const std::string& out_dir) {
  int total = config.source_normals + config.target_normals;
  for (int c = 0; c < kNumClasses; ++c)
    total += config.source_counts[c] + config.target_counts[c];
  if (total <= 0) throw std::invalid_argument("fixture: zero total count");
  if (config.resolution < 64)
    throw std::invalid_argument("fixture: resolution below 64");

  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "gt");

  Rng rng(derive_seed(seed, "fixture"));
  FixtureResult result;
  result.dir = out_dir;

  int serial = 0;
  for (Domain domain : {Domain::source, Domain::target}) {
    const auto& counts = domain == Domain::source ? config.source_counts
                                                  : config.target_counts;
    const int normals = domain == Domain::source ? config.source_normals
                                                 : config.target_normals;
    // One slot per per-class image; merging two slots of different classes
    // yields a dual-label image while keeping per-class positives exact.
    std::vector<int> slots;
    for (int c = 0; c < kNumClasses; ++c)
      for (int i = 0; i < counts[c]; ++i) slots.push_back(c);
    rng.shuffle(slots);

    std::vector<LabelVector> labels;
    for (size_t i = 0; i < slots.size();) {
      LabelVector y = zero_label();
      y[slots[i]] = 1.0;
      if (i + 1 < slots.size() && slots[i + 1] != slots[i] &&
          rng.coin(config.multi_label_prob)) {
        y[slots[i + 1]] = 1.0;
        i += 2;
      } else {
        i += 1;
      }
      labels.push_back(y);
    }
    for (int i = 0; i < normals; ++i) labels.push_back(zero_label());
    rng.shuffle(labels);

    for (const auto& label : labels) {
      const std::string id =
          (domain == Domain::source ? "src_" : "tgt_") + std::to_string(serial++);
      RenderedImage img =
          render_image(config.resolution, domain, label, rng, config);
      img.meta.image_id = id;

      const std::string rel = "images/" + id + ".png";
      write_png((fs::path(out_dir) / rel).string(), img.image);
      if (domain == Domain::target)
        write_mask_png((fs::path(out_dir) / ("gt/" + id + "_occ.png")).string(),
                       img.occluders);

      DatasetRecord rec;
      rec.image_id = id;
      rec.path = rel;
      rec.domain = domain;
      rec.label = label;
      result.index.records.push_back(rec);
      result.metas.push_back(img.meta);
    }
  }

  save_manifest((fs::path(out_dir) / "manifest.csv").string(), result.index);
  save_fixture_meta((fs::path(out_dir) / "meta.json").string(), result.metas);
  return result;
}

std::array<int, kNumClasses> count_lesion_blobs(const ImageGrid& img,
                                                bool target_style,
                                                double tolerance,
                                                int min_area) {
  const auto sigs = target_style ? target_signatures() : source_signatures();
  if (min_area <= 0)
    min_area = std::max(4, (img.height / 64) * (img.width / 64) * 4);
  const double cy = img.height / 2.0, cx = img.width / 2.0;
  // Central field region: keeps the scan away from borders and occluders.
  const double ry = (target_style ? 0.30 : 0.40) * img.height;
  const double rx = 0.40 * img.width;

  // Per-pixel class assignment, -1 = none.
  std::vector<int8_t> cls(static_cast<size_t>(img.height) * img.width, -1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dy = (y - cy) / ry, dx = (x - cx) / rx;
      if (dy * dy + dx * dx > 1.0) continue;
      Color px = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
      int best = -1;
      double best_d = tolerance;
      for (int c = 0; c < kNumClasses; ++c) {
        const double d = color_dist(px, sigs[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      cls[static_cast<size_t>(y) * img.width + x] = static_cast<int8_t>(best);
    }

  // 8-connected components per class, counted if area >= min_area.
  std::array<int, kNumClasses> counts{};
  std::vector<uint8_t> visited(cls.size(), 0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const size_t i0 = static_cast<size_t>(y) * img.width + x;
      if (visited[i0] || cls[i0] < 0) continue;
      const int c = cls[i0];
      int area = 0;
      std::queue<std::pair<int, int>> q;
      q.push({y, x});
      visited[i0] = 1;
      while (!q.empty()) {
        auto [yy, xx] = q.front();
        q.pop();
        ++area;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = yy + dy, nx = xx + dx;
            if (ny < 0 || nx < 0 || ny >= img.height || nx >= img.width)
              continue;
            const size_t ni = static_cast<size_t>(ny) * img.width + nx;
            if (!visited[ni] && cls[ni] == c) {
              visited[ni] = 1;
              q.push({ny, nx});
            }
          }
      }
      if (area >= min_area) ++counts[c];
    }
  return counts;
}

std::array<bool, kNumClasses> detect_lesions(const ImageGrid& img,
                                             bool target_style,
                                             double tolerance) {
  const auto counts = count_lesion_blobs(img, target_style, tolerance);
  std::array<bool, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c) out[c] = counts[c] > 0;
  return out;
}

void save_fixture_meta(const std::string& path,
                       const std::vector<FixtureImageMeta>& metas) {
  json arr = json::array();
  for (const auto& m : metas) {
    json lesions = json::array();
    for (const auto& l : m.lesions)
      lesions.push_back({{"class", l.class_index},
                         {"cy", l.cy},
                         {"cx", l.cx},
                         {"r", l.radius}});
    arr.push_back({{"image_id", m.image_id},
                   {"domain", domain_to_string(m.domain)},
                   {"labels", label_to_string(m.label)},
                   {"lesions", lesions},
                   {"fov_ry", m.fov_ry},
                   {"fov_rx", m.fov_rx}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << arr.dump(1) << "\n";
}

std::vector<FixtureImageMeta> load_fixture_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json arr = json::parse(in);
  std::vector<FixtureImageMeta> out;
  for (const auto& j : arr) {
    FixtureImageMeta m;
    m.image_id = j.at("image_id").get<std::string>();
    m.domain = domain_from_string(j.at("domain").get<std::string>());
    m.label = label_from_string(j.at("labels").get<std::string>());
    for (const auto& l : j.at("lesions"))
      m.lesions.push_back({l.at("class").get<int>(), l.at("cy").get<double>(),
                           l.at("cx").get<double>(), l.at("r").get<double>()});
    m.fov_ry = j.at("fov_ry").get<double>();
    m.fov_rx = j.at("fov_rx").get<double>();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace fundusda
