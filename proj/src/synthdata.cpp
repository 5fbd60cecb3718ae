#include "ardet/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ardet/rng.hpp"

namespace ardet {

namespace {

struct Color {
  double r, g, b;
};

class Canvas {
 public:
  explicit Canvas(int n) : n_(n), px_(static_cast<std::size_t>(n) * n * 3, 0.0) {}

  void fill_rect(double x1, double y1, double x2, double y2, Color c) {
    const int ax = std::max(0, static_cast<int>(std::floor(x1)));
    const int ay = std::max(0, static_cast<int>(std::floor(y1)));
    const int bx = std::min(n_, static_cast<int>(std::ceil(x2)));
    const int by = std::min(n_, static_cast<int>(std::ceil(y2)));
    for (int y = ay; y < by; ++y)
      for (int x = ax; x < bx; ++x) set(x, y, c);
  }

  void fill_ellipse(double cx, double cy, double rx, double ry, Color c) {
    const int ax = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int ay = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int bx = std::min(n_, static_cast<int>(std::ceil(cx + rx)));
    const int by = std::min(n_, static_cast<int>(std::ceil(cy + ry)));
    for (int y = ay; y < by; ++y)
      for (int x = ax; x < bx; ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) set(x, y, c);
      }
  }

  void set(int x, int y, Color c) {
    const std::size_t i = (static_cast<std::size_t>(y) * n_ + x) * 3;
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
  }

  int size() const { return n_; }
  std::vector<double>& pixels() { return px_; }

 private:
  int n_;
  std::vector<double> px_;  // interleaved rgb
};

Color muted(Rng& rng, double lo, double hi) {
  const double base = rng.uniform(lo, hi);
  return {base + rng.uniform(-0.05, 0.05), base + rng.uniform(-0.05, 0.05),
          base + rng.uniform(-0.05, 0.05)};
}

Color saturated(Rng& rng) {
  // One dominant channel keeps pedestrians visually distinct from the
  // low-saturation background and clutter.
  const int ch = rng.uniform_int(3);
  const double hiv = rng.uniform(0.72, 0.98);
  const double lov = rng.uniform(0.02, 0.22);
  Color c{lov, lov, lov};
  (ch == 0 ? c.r : ch == 1 ? c.g : c.b) = hiv;
  return c;
}

void draw_pedestrian(Canvas& cv, const Box& b, Rng& rng) {
  const double w = b.width(), h = b.height(), cx = b.cx();
  const Color shirt = saturated(rng);
  const Color pants{rng.uniform(0.03, 0.18), rng.uniform(0.03, 0.18), rng.uniform(0.03, 0.18)};
  const Color skin{rng.uniform(0.70, 0.92), rng.uniform(0.55, 0.75), rng.uniform(0.42, 0.60)};
  const double split = rng.uniform(0.58, 0.66);  // torso/legs boundary
  // torso
  cv.fill_rect(b.x1 + 0.06 * w, b.y1 + 0.16 * h, b.x2 - 0.06 * w, b.y1 + split * h, shirt);
  // legs with a vertical gap between them
  const double gap = 0.10 * w;
  cv.fill_rect(b.x1 + 0.10 * w, b.y1 + split * h, cx - 0.5 * gap, b.y2, pants);
  cv.fill_rect(cx + 0.5 * gap, b.y1 + split * h, b.x2 - 0.10 * w, b.y2, pants);
  // head
  cv.fill_ellipse(cx, b.y1 + 0.09 * h, 0.26 * w, 0.09 * h, skin);
}

double overlap_fraction(const Box& inner, const Box& outer) {
  const double ix = std::min(inner.x2, outer.x2) - std::max(inner.x1, outer.x1);
  const double iy = std::min(inner.y2, outer.y2) - std::max(inner.y1, outer.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return ix * iy / outer.area();
}

}  // namespace

AnnotatedScene generate_scene(const SceneConfig& cfg, int index) {
  if (cfg.ped_min > cfg.ped_max || cfg.ped_min < 0)
    throw std::invalid_argument("pedestrian count range is empty");
  if (cfg.height_min > cfg.height_max) throw std::invalid_argument("height range is empty");
  const int n = cfg.image_size;
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(index));
  Canvas cv(n);

  // Background: muted base with a vertical gradient and clutter rectangles.
  const Color base = muted(rng, 0.30, 0.60);
  const double grad = rng.uniform(-0.12, 0.12);
  for (int y = 0; y < n; ++y) {
    const double g = grad * (static_cast<double>(y) / n - 0.5);
    for (int x = 0; x < n; ++x)
      cv.set(x, y, {base.r + g, base.g + g, base.b + g});
  }
  for (int i = 0; i < cfg.clutter; ++i) {
    const double w = rng.uniform(6.0, 48.0), h = rng.uniform(6.0, 48.0);
    const double x = rng.uniform(-w, n * 1.0), y = rng.uniform(-h, n * 1.0);
    cv.fill_rect(x, y, x + w, y + h, muted(rng, 0.18, 0.72));
  }

  AnnotatedScene scene;
  const int want = cfg.ped_min + (cfg.ped_max > cfg.ped_min
                                      ? rng.uniform_int(cfg.ped_max - cfg.ped_min + 1)
                                      : 0);
  for (int p = 0; p < want; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 25 && !placed; ++attempt) {
      const double h = rng.uniform(cfg.height_min, cfg.height_max);
      const double aspect = cfg.aspect_mean + cfg.aspect_jitter * rng.uniform(-1.0, 1.0);
      const double w = aspect * h;
      const double cx = rng.uniform(0.5 * w + 1.0, n - 0.5 * w - 1.0);
      const double cy = rng.uniform(0.5 * h + 1.0, n - 0.5 * h - 1.0);
      const Box b{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
      bool clash = false;
      for (const Box& other : scene.gts)
        if (iou(b, other) > 0.35) clash = true;
      if (clash) continue;
      scene.gts.push_back(b);
      scene.occlusion.push_back(0.0);
      placed = true;
    }
    if (!placed) scene.placement_truncated = true;
  }

  for (std::size_t p = 0; p < scene.gts.size(); ++p) draw_pedestrian(cv, scene.gts[p], rng);

  // Partial occluders drawn over pedestrians, background-like color.
  for (std::size_t p = 0; p < scene.gts.size(); ++p) {
    if (rng.uniform() >= cfg.occlusion_prob) continue;
    const Box& b = scene.gts[p];
    const double frac = rng.uniform(0.15, 0.45);
    const int side = rng.uniform_int(3);  // 0 left, 1 right, 2 bottom
    Box occ = b;
    if (side == 0)
      occ.x2 = b.x1 + frac * b.width();
    else if (side == 1)
      occ.x1 = b.x2 - frac * b.width();
    else
      occ.y1 = b.y2 - frac * b.height();
    cv.fill_rect(occ.x1, occ.y1, occ.x2, occ.y2, muted(rng, 0.25, 0.65));
    scene.occlusion[p] = overlap_fraction(occ, b);
  }

  // Low-amplitude texture noise over everything.
  auto& px = cv.pixels();
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double t = rng.uniform(-0.045, 0.045);
      const std::size_t i = (static_cast<std::size_t>(y) * n + x) * 3;
      px[i] += t;
      px[i + 1] += t;
      px[i + 2] += t;
    }

  // Planar (3, H, W) tensor, clamped to [0, 1].
  scene.image = Tensor::make({3, n, n});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        scene.image->data[(static_cast<std::size_t>(c) * n + y) * n + x] =
            std::clamp(px[(static_cast<std::size_t>(y) * n + x) * 3 + c], 0.0, 1.0);
  return scene;
}

PpmImage scene_to_ppm(const AnnotatedScene& scene) {
  const int n = scene.image->dim(1);
  PpmImage img;
  img.width = n;
  img.height = n;
  img.rgb.resize(static_cast<std::size_t>(n) * n * 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c)
        img.rgb[(static_cast<std::size_t>(y) * n + x) * 3 + c] = static_cast<std::uint8_t>(
            std::lround(scene.image->data[(static_cast<std::size_t>(c) * n + y) * n + x] * 255.0));
  return img;
}

void write_dataset(const SceneConfig& cfg, const std::filesystem::path& dir, int count,
                   int start_index) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "labels");
  for (int i = 0; i < count; ++i) {
    const AnnotatedScene scene = generate_scene(cfg, start_index + i);
    char name[16];
    std::snprintf(name, sizeof name, "%04d", i);
    write_ppm(dir / "images" / (std::string(name) + ".ppm"), scene_to_ppm(scene));
    std::ofstream os(dir / "labels" / (std::string(name) + ".txt"));
    if (!os) throw std::runtime_error("cannot write labels in " + dir.string());
    char line[200];
    for (std::size_t g = 0; g < scene.gts.size(); ++g) {
      const Box& b = scene.gts[g];
      std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g\n", b.x1, b.y1, b.x2, b.y2,
                    scene.occlusion[g]);
      os << line;
    }
  }
  std::ofstream meta(dir / "meta.cfg");
  meta << "image_size = " << cfg.image_size << "\n"
       << "count = " << count << "\n"
       << "start_index = " << start_index << "\n"
       << "seed = " << cfg.seed << "\n";
}

std::vector<LoadedScene> read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<LoadedScene> scenes;
  const fs::path images = dir / "images";
  if (!fs::exists(images)) return scenes;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images))
    if (e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    LoadedScene s;
    s.image = read_ppm(f);
    const fs::path label = dir / "labels" / (f.stem().string() + ".txt");
    std::ifstream is(label);
    if (!is) throw std::runtime_error("missing label file: " + label.string());
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      Box b;
      double occ;
      char extra;
      if (std::sscanf(line.c_str(), "%lg %lg %lg %lg %lg %c", &b.x1, &b.y1, &b.x2, &b.y2, &occ,
                      &extra) != 5)
        throw std::runtime_error(label.string() + ":" + std::to_string(lineno) +
                                 ": malformed annotation line");
      s.gts.push_back(b);
      s.occlusion.push_back(occ);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

TensorPtr scene_tensor(const PpmImage& img) {
  auto t = Tensor::make({1, 3, img.height, img.width});
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t->data[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] =
            img.rgb[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] / 255.0;
  return t;
}

}  // namespace ardet
