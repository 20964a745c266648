#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tmr/synth.hpp"
#include "tmr/textmask.hpp"

#include <sstream>

using namespace tmr;

namespace {

struct Rendered {
  GrayImage image;
  TextBox bounds;  // tight pixel bounds of the glyphs
  std::vector<std::pair<int, int>> ink;
};

// Word in the built-in 5x7 font, each font pixel drawn as a `scale` square.
Rendered render_word(const std::string& word, int scale, int ox, int oy, int w = 200, int h = 80) {
  Rendered r{GrayImage(w, h, 245), {w, h, 0, 0, 1.0}, {}};
  for (std::size_t c = 0; c < word.size(); ++c) {
    const auto& rows = glyph_rows(word[c]);
    for (int gy = 0; gy < 7; ++gy)
      for (int gx = 0; gx < 5; ++gx) {
        if (!(rows[static_cast<std::size_t>(gy)] & (0x10 >> gx))) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) {
            const int x = ox + static_cast<int>(c) * 6 * scale + gx * scale + dx, y = oy + gy * scale + dy;
            r.image.at(x, y) = 20;
            r.ink.emplace_back(x, y);
            r.bounds.x0 = std::min(r.bounds.x0, x), r.bounds.y0 = std::min(r.bounds.y0, y);
            r.bounds.x1 = std::max(r.bounds.x1, x + 1), r.bounds.y1 = std::max(r.bounds.y1, y + 1);
          }
      }
  }
  return r;
}

DescriptorSet points(std::vector<std::pair<double, double>> xy) {
  DescriptorSet s;
  s.feature_id = "sift";
  s.vectors.resize(static_cast<Eigen::Index>(xy.size()), 2);
  for (std::size_t i = 0; i < xy.size(); ++i) {
    s.keypoints.push_back({xy[i].first, xy[i].second, 2.0, 0.0, 1.0});
    s.vectors.row(static_cast<Eigen::Index>(i)) << static_cast<float>(i), 0.0f;
  }
  return s;
}

}  // namespace

TEST_CASE("iou") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0));
}

TEST_CASE("blank image has no text") {
  CHECK(detect_text_regions(GrayImage(120, 60, 255)).empty());
  CHECK(detect_text_regions(GrayImage(120, 60, 0)).empty());
}

TEST_CASE("a rendered word is found") {
  for (const std::string word : {"MARKET", "BRIGHT", "SOLVED"}) {
    for (int scale : {2, 3}) {
      const Rendered r = render_word(word, scale, 14, 20);
      const auto boxes = detect_text_regions(r.image);
      REQUIRE(boxes.size() == 1);
      const TextBox& b = boxes[0];
      std::size_t covered = 0;
      for (const auto& [x, y] : r.ink) covered += b.contains(x, y);
      CHECK(covered >= 0.8 * r.ink.size());
      CHECK(b.area() <= 1.5 * r.bounds.area());
      CHECK(b.confidence > 0.0);
      CHECK(b.confidence <= 1.0);

      // light text on a dark ground is swept too
      const auto inv = detect_text_regions(invert_contrast(r.image));
      REQUIRE(inv.size() == 1);
      CHECK(iou(inv[0], b) > 0.8);
    }
  }
}

TEST_CASE("synthetic word distractors are found at their annotated bounds") {
  SynthSpec spec;
  spec.seed = 17;
  spec.text_only = 30;
  spec.figure_only = 0;
  spec.combined = 0;
  spec.groups = 0;
  int hits = 0, total = 0;
  for (const auto& d : synth_corpus(spec).distractors) {
    const auto boxes = detect_text_regions(to_gray(d.image));
    for (const auto& truth : d.text_bounds) {
      ++total;
      for (const auto& b : boxes)
        if (iou(b, truth) >= 0.5) {
          ++hits;
          break;
        }
    }
  }
  REQUIRE(total >= 30);
  CHECK(hits >= 0.8 * total);
}

TEST_CASE("figure-only marks rarely trigger confident boxes") {
  SynthSpec spec;
  spec.seed = 23;
  spec.text_only = 0;
  spec.figure_only = 50;
  spec.combined = 0;
  spec.groups = 0;
  int violations = 0;
  for (const auto& d : synth_corpus(spec).distractors) {
    const auto boxes = detect_text_regions(to_gray(d.image));
    violations += std::any_of(boxes.begin(), boxes.end(), [](const TextBox& b) { return b.confidence >= 0.5; });
  }
  CHECK(violations <= 5);
}

TEST_CASE("detection is deterministic") {
  const GrayImage g = to_gray(synth_corpus({.seed = 3, .text_only = 1, .figure_only = 0, .combined = 1, .groups = 0})
                                  .distractors[1]
                                  .image);
  const auto a = detect_text_regions(g), b = detect_text_regions(g);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x0 == b[i].x0);
    CHECK(a[i].y1 == b[i].y1);
    CHECK(a[i].confidence == b[i].confidence);
  }
}

TEST_CASE("filter_keypoints") {
  const DescriptorSet s = points({{5, 5}, {50, 50}, {12, 3}, {90, 10}, {51, 49}});
  CHECK(filter_keypoints(s, {}).vectors == s.vectors);
  const std::vector<TextBox> all = {{0, 0, 100, 100, 1.0}};
  CHECK(filter_keypoints(s, all).size() == 0);
  CHECK(filter_keypoints(s, all).dim() == 2);

  const std::vector<TextBox> two = {{45, 45, 55, 52, 1.0}};
  const DescriptorSet kept = filter_keypoints(s, two);
  REQUIRE(kept.size() == 3);
  CHECK(kept.vectors(0, 0) == 0.0f);
  CHECK(kept.vectors(1, 0) == 2.0f);
  CHECK(kept.vectors(2, 0) == 3.0f);
  CHECK(kept.keypoints[1].x == 12);
  CHECK(kept.feature_id == "sift");

  // right and bottom edges are exclusive
  CHECK(filter_keypoints(points({{55, 50}}), two).size() == 1);
}

TEST_CASE("subsequence property on random boxes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 100);
  std::uniform_int_distribution<int> c(0, 90);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, double>> xy(40);
    for (auto& p : xy) p = {u(rng), u(rng)};
    const DescriptorSet s = points(xy);
    std::vector<TextBox> boxes;
    for (int b = 0; b < 3; ++b) {
      const int x0 = c(rng), y0 = c(rng);
      boxes.push_back({x0, y0, x0 + 10, y0 + 10, 1.0});
    }
    std::size_t inside = 0;
    for (const auto& [x, y] : xy) inside += std::any_of(boxes.begin(), boxes.end(), [&](const TextBox& b) { return b.contains(x, y); });
    const DescriptorSet f = filter_keypoints(s, boxes);
    CHECK(static_cast<std::size_t>(f.size()) + inside == xy.size());
    for (Eigen::Index i = 1; i < f.size(); ++i) CHECK(f.vectors(i - 1, 0) < f.vectors(i, 0));
  }
}

TEST_CASE("text box CSV") {
  std::ostringstream os;
  const std::vector<TextBox> b = {{1, 2, 3, 4, 0.75}};
  write_text_boxes_csv(os, "img.png", b);
  CHECK(os.str() == "img.png,1,2,3,4,0.75\n");
}
