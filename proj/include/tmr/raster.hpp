#pragma once

#include "tmr/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tmr {

using Rgb = std::array<std::uint8_t, 3>;

/// Decoded 8-bit RGB image, row-major interleaved.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RasterImage() = default;
  RasterImage(int w, int h, Rgb fill = {255, 255, 255});

  Rgb at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    pixels[i] = c[0];
    pixels[i + 1] = c[1];
    pixels[i + 2] = c[2];
  }
  bool operator==(const RasterImage&) const = default;
};

/// 8-bit luma image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

// Decoding. JPEG and PNG are recognised by their signatures.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 95);
void save_png(const RasterImage& img, const std::filesystem::path& path);

/// Rec. 601 luma, rounded to nearest.
GrayImage to_gray(const RasterImage& img);
RasterImage gray_to_rgb(const GrayImage& gray);

Hsv rgb_to_hsv(Rgb pixel);
Rgb hsv_to_rgb(const Hsv& hsv);

// Bilinear resampling with pixel centres at i + 0.5; source coordinates are
// clamped to the valid range so borders replicate.
RasterImage resize_bilinear(const RasterImage& img, int new_w, int new_h);
GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h);
ImageF resize_bilinear(const ImageF& img, int new_w, int new_h);

GrayImage invert_contrast(const GrayImage& gray);
RasterImage invert_contrast(const RasterImage& img);

inline constexpr int kDefaultAutocropTolerance = 8;

/// Strips uniform borders matching the corner colour. Repeats until no border
/// is left so the result is a fixpoint; returns the input when everything
/// would be removed or the four corners disagree.
RasterImage autocrop(const RasterImage& img, int background_tolerance = kDefaultAutocropTolerance);

/// Gray image as float plane scaled to [0, 1].
ImageF to_float(const GrayImage& gray);

/// Rotates by a multiple of 90 degrees clockwise.
GrayImage rotate90(const GrayImage& gray, int quarter_turns);

struct CorpusEntry {
  std::string id;  // path relative to the corpus root, '/' separated
  std::filesystem::path path;
};

/// Recursively lists .png/.jpg/.jpeg files under root, sorted by id.
std::vector<CorpusEntry> list_corpus(const std::filesystem::path& root);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace tmr
