#pragma once

#include "tmr/keypoint_features.hpp"
#include "tmr/raster.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tmr {

/// Pixel rectangle [x0, x1) x [y0, y1).
struct TextBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double confidence = 0.0;

  int area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

double iou(const TextBox& a, const TextBox& b);

struct TextDetectorParams {
  int threshold_levels = 8;
  int min_char_height = 8;
  double max_char_height_ratio = 0.8;
  double min_aspect = 0.1, max_aspect = 1.5;
  double min_fill = 0.1, max_fill = 0.95;
  double max_stroke_cv = 0.5;  // std / mean of per-pixel stroke width
  double merge_iou = 0.5;
};

/// Multi-threshold connected-component text detector. Both polarities are
/// swept; character-like components in horizontal runs of three or more are
/// grouped into word boxes, and boxes from different levels that overlap by
/// IoU >= 0.5 are merged.
std::vector<TextBox> detect_text_regions(const GrayImage& gray, const TextDetectorParams& params = {});

/// Keeps the rows whose keypoint centre lies in no box, in order.
DescriptorSet filter_keypoints(const DescriptorSet& set, std::span<const TextBox> boxes);

/// CSV rows "image_id,x0,y0,x1,y1,confidence".
void write_text_boxes_csv(std::ostream& out, const std::string& image_id, std::span<const TextBox> boxes);

}  // namespace tmr
