#pragma once

#include "tmr/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace tmr::test {

inline GrayImage random_gray(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(lo, hi);
  GrayImage g(w, h);
  for (auto& p : g.pixels) p = static_cast<std::uint8_t>(d(rng));
  return g;
}

inline RasterImage random_rgb(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  RasterImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

/// Smooth random image: sum of a few random Gaussian blobs on mid gray.
inline GrayImage blobs(int w, int h, std::uint64_t seed, int count = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.15 * w, 0.85 * w), uy(0.15 * h, 0.85 * h), us(3.0, 8.0),
      ua(-110.0, 110.0);
  std::vector<std::array<double, 4>> b;
  for (int i = 0; i < count; ++i) b.push_back({ux(rng), uy(rng), us(rng), ua(rng)});
  GrayImage g(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 128.0;
      for (const auto& [cx, cy, s, a] : b) v += a * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * s * s));
      g.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return g;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("tmr_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tmr::test
