#include "tmr/textmask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace tmr {

double iou(const TextBox& a, const TextBox& b) {
  const int ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const int iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.area()) + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct Component {
  int x0, y0, x1, y1;  // exclusive max
  int area = 0;
  double stroke_sum = 0.0, stroke_sq = 0.0;
  double confidence = 0.0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  double cy() const { return 0.5 * (y0 + y1); }
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Per-pixel stroke width estimate: the shorter of the horizontal and vertical
// runs through the pixel.
std::vector<int> stroke_widths(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<int> hrun(mask.size(), 0), out(mask.size(), 0);
  for (int y = 0; y < h; ++y) {
    int x = 0;
    while (x < w) {
      if (!mask[y * w + x]) {
        ++x;
        continue;
      }
      int e = x;
      while (e < w && mask[y * w + e]) ++e;
      for (int i = x; i < e; ++i) hrun[y * w + i] = e - x;
      x = e;
    }
  }
  for (int x = 0; x < w; ++x) {
    int y = 0;
    while (y < h) {
      if (!mask[y * w + x]) {
        ++y;
        continue;
      }
      int e = y;
      while (e < h && mask[e * w + x]) ++e;
      for (int i = y; i < e; ++i) out[i * w + x] = std::min(hrun[i * w + x], e - y);
      y = e;
    }
  }
  return out;
}

std::vector<Component> components(const std::vector<std::uint8_t>& mask, int w, int h) {
  const auto stroke = stroke_widths(mask, w, h);
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    Component c{start % w, start / w, start % w + 1, start / w + 1};
    stack.assign(1, start);
    label[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int px = p % w, py = p / w;
      c.x0 = std::min(c.x0, px);
      c.y0 = std::min(c.y0, py);
      c.x1 = std::max(c.x1, px + 1);
      c.y1 = std::max(c.y1, py + 1);
      ++c.area;
      c.stroke_sum += stroke[p];
      c.stroke_sq += static_cast<double>(stroke[p]) * stroke[p];
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int q = ny * w + nx;
          if (mask[q] && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
    }
    out.push_back(c);
  }
  return out;
}

// Returns the number of heuristics passed, or -1 when the component is
// rejected outright (height out of range).
int score_component(const Component& c, int image_h, const TextDetectorParams& p) {
  const int hgt = c.height();
  if (hgt < p.min_char_height || hgt > p.max_char_height_ratio * image_h) return -1;
  int passed = 1;
  const double aspect = static_cast<double>(c.width()) / hgt;
  if (aspect >= p.min_aspect && aspect <= p.max_aspect) ++passed;
  const double fill = static_cast<double>(c.area) / (static_cast<double>(c.width()) * hgt);
  if (fill >= p.min_fill && fill <= p.max_fill) ++passed;
  const double mean = c.stroke_sum / c.area;
  const double var = std::max(0.0, c.stroke_sq / c.area - mean * mean);
  if (mean > 0.0 && std::sqrt(var) / mean < p.max_stroke_cv) ++passed;
  return passed;
}

bool linked(const Component& a, const Component& b) {
  const double ha = a.height(), hb = b.height();
  const double hmax = std::max(ha, hb);
  if (hmax > 2.0 * std::min(ha, hb)) return false;
  if (std::abs(a.cy() - b.cy()) > 0.5 * hmax) return false;
  const int gap = std::max(a.x0, b.x0) - std::min(a.x1, b.x1);
  return gap <= 1.5 * hmax;
}

void word_boxes(const std::vector<std::uint8_t>& mask, int w, int h, const TextDetectorParams& p,
                std::vector<TextBox>& out) {
  std::vector<Component> chars;
  for (auto& c : components(mask, w, h)) {
    const int passed = score_component(c, h, p);
    if (passed < 3) continue;
    c.confidence = passed / 4.0;
    chars.push_back(c);
  }
  const int n = static_cast<int>(chars.size());
  if (n < 3) return;
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (linked(chars[i], chars[j])) uf.unite(i, j);
  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
  for (const auto& g : groups) {
    if (g.size() < 3) continue;
    TextBox b{w, h, 0, 0, 0.0};
    for (int i : g) {
      b.x0 = std::min(b.x0, chars[i].x0);
      b.y0 = std::min(b.y0, chars[i].y0);
      b.x1 = std::max(b.x1, chars[i].x1);
      b.y1 = std::max(b.y1, chars[i].y1);
      b.confidence += chars[i].confidence;
    }
    b.confidence /= static_cast<double>(g.size());
    out.push_back(b);
  }
}

}  // namespace

std::vector<TextBox> detect_text_regions(const GrayImage& gray, const TextDetectorParams& params) {
  const int w = gray.width, h = gray.height;
  std::vector<TextBox> raw;
  std::vector<std::uint8_t> mask(gray.pixels.size());
  for (int level = 0; level < params.threshold_levels; ++level) {
    const double t = 255.0 * (level + 1) / (params.threshold_levels + 1);
    for (int polarity = 0; polarity < 2; ++polarity) {
      for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = polarity == 0 ? gray.pixels[i] < t : gray.pixels[i] > t;
      word_boxes(mask, w, h, params, raw);
    }
  }
  // merge overlapping detections until stable
  std::sort(raw.begin(), raw.end(), [](const TextBox& a, const TextBox& b) {
    return std::tie(b.confidence, a.y0, a.x0, a.y1, a.x1) < std::tie(a.confidence, b.y0, b.x0, b.y1, b.x1);
  });
  std::vector<TextBox> merged;
  for (const auto& b : raw) merged.push_back(b);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<TextBox> next;
    for (const auto& b : merged) {
      auto hit = std::find_if(next.begin(), next.end(), [&](const TextBox& m) { return iou(m, b) >= params.merge_iou; });
      if (hit == next.end()) {
        next.push_back(b);
        continue;
      }
      hit->x0 = std::min(hit->x0, b.x0);
      hit->y0 = std::min(hit->y0, b.y0);
      hit->x1 = std::max(hit->x1, b.x1);
      hit->y1 = std::max(hit->y1, b.y1);
      hit->confidence = std::max(hit->confidence, b.confidence);
      changed = true;
    }
    merged = std::move(next);
  }
  std::sort(merged.begin(), merged.end(),
            [](const TextBox& a, const TextBox& b) { return std::tie(a.y0, a.x0, a.y1, a.x1) < std::tie(b.y0, b.x0, b.y1, b.x1); });
  return merged;
}

DescriptorSet filter_keypoints(const DescriptorSet& set, std::span<const TextBox> boxes) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < set.keypoints.size(); ++i) {
    const auto& kp = set.keypoints[i];
    const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const TextBox& b) { return b.contains(kp.x, kp.y); });
    if (!inside) keep.push_back(static_cast<Eigen::Index>(i));
  }
  DescriptorSet out;
  out.feature_id = set.feature_id;
  out.vectors.resize(static_cast<Eigen::Index>(keep.size()), set.vectors.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.vectors.row(static_cast<Eigen::Index>(i)) = set.vectors.row(keep[i]);
    out.keypoints.push_back(set.keypoints[static_cast<std::size_t>(keep[i])]);
  }
  return out;
}

void write_text_boxes_csv(std::ostream& out, const std::string& image_id, std::span<const TextBox> boxes) {
  for (const auto& b : boxes)
    out << image_id << ',' << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << ',' << b.confidence << '\n';
}

}  // namespace tmr
