#pragma once

#include "tmr/metrics.hpp"
#include "tmr/raster.hpp"
#include "tmr/types.hpp"

#include <string>

namespace tmr {

/// One fixed-length global feature vector per image.
struct DenseDescriptor {
  std::string feature_id;
  Eigen::VectorXd values;

  Eigen::Index dim() const { return values.size(); }
};

// ---- colour ----------------------------------------------------------------

inline constexpr int kHsvHueBins = 8;
inline constexpr int kHsvSatBins = 3;
inline constexpr int kHsvValBins = 3;
inline constexpr int kHsv72Dim = kHsvHueBins * kHsvSatBins * kHsvValBins;

/// Non-uniform hue quantisation; bin 0 wraps around 0 degrees.
int hsv72_hue_bin(double hue_deg);
/// Flat bin index hue * 9 + sat * 3 + val.
int hsv72_bin(const Hsv& hsv);
/// Representative HSV colour for each bin (hue arc midpoint, sat/val midpoints).
Hsv hsv72_bin_center(int bin);

DenseDescriptor color_histogram_hsv72(const RasterImage& img);
/// Uniform RGB histogram with 4 or 8 bins per channel (64 or 512 colours).
DenseDescriptor color_histogram_rgb(const RasterImage& img, int bins_per_channel);

// ---- texture ---------------------------------------------------------------

enum class LbpVariant { Base, RotationInvariant, Uniform, RotationInvariantUniform };

std::string_view to_string(LbpVariant v);
std::optional<LbpVariant> parse_lbp_variant(std::string_view name);

/// Histogram length of the given LBP variant for P neighbours.
int lbp_dim(int neighbors, LbpVariant variant);

struct LbpParams {
  int neighbors = 8;
  double radius = 1.0;
  LbpVariant variant = LbpVariant::Base;
  Normalization normalization = Normalization::L1;
};

/// Circular LBP histogram. Neighbours are bilinearly interpolated and a
/// neighbour counts as set when it is >= the centre pixel.
DenseDescriptor lbp(const GrayImage& gray, const LbpParams& params = {});

/// Per-pixel raw LBP codes over the interior; exposed for tests.
Eigen::ArrayXXi lbp_codes(const GrayImage& gray, int neighbors, double radius);

// ---- GIST ------------------------------------------------------------------

inline constexpr int kGistSize = 128;
inline constexpr int kGistScales = 4;
inline constexpr int kGistOrientations = 8;
inline constexpr int kGistGrid = 4;
inline constexpr int kGistDim = kGistScales * kGistOrientations * kGistGrid * kGistGrid;

/// Gabor-energy scene descriptor on a 4x4 grid, L2-normalised; an image with
/// no oriented energy maps to the zero vector.
DenseDescriptor gist(const GrayImage& gray);

}  // namespace tmr
