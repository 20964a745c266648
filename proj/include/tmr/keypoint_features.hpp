#pragma once

#include "tmr/raster.hpp"
#include "tmr/types.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace tmr {

struct Codebook;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;        // sigma in input-image pixels
  double orientation = 0.0;  // radians, [0, 2 pi)
  double response = 0.0;     // |DoG| at the refined extremum; 0 for dense grids
};

/// Variable-count local descriptors for one image; row i belongs to keypoints[i].
struct DescriptorSet {
  std::string feature_id;
  std::vector<Keypoint> keypoints;
  DescriptorMatrix vectors;

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

struct DogConfig {
  int octaves = 4;
  int scales_per_octave = 3;
  double sigma0 = 1.6;
  double contrast_threshold = 0.03;
  double edge_threshold = 10.0;
  std::size_t max_keypoints = 2000;
};

inline constexpr std::size_t kMaxDescriptorsPerImage = 2000;

/// Difference-of-Gaussians extrema with sub-pixel refinement, contrast and
/// edge rejection and histogram-peak orientation assignment. Strongest
/// responses are kept first when the cap applies.
std::vector<Keypoint> detect_dog_keypoints(const GrayImage& gray, const DogConfig& cfg = {});

/// Discrete scale index (octave * S + level) used to group same-scale points.
int scale_level(const Keypoint& kp, const DogConfig& cfg = {});

/// 4x4x8 gradient-orientation histogram descriptor.
DescriptorSet describe_sift(const GrayImage& gray, std::span<const Keypoint> keypoints, const DogConfig& cfg = {});

/// Same pipeline with orientations (keypoint frame included) folded modulo pi:
/// 4x4x4 and unchanged by contrast inversion.
DescriptorSet describe_orsift(const GrayImage& gray, std::span<const Keypoint> keypoints, const DogConfig& cfg = {});

/// Orientation bin of a folded gradient angle for `bins` bins over [0, pi).
int folded_orientation_bin(double angle, int bins);

/// Dense HOG: 9 unsigned orientation bins per cell, 2x2-cell blocks with
/// one-cell stride, block L2 normalisation (all-zero blocks stay zero).
DescriptorSet describe_hog_dense(const GrayImage& gray, int cell_px = 8);

inline constexpr int kShapeContextRadialBins = 5;
inline constexpr int kShapeContextAngularBins = 12;
inline constexpr int kShapeContextDim = kShapeContextRadialBins * kShapeContextAngularBins;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Unnormalised log-polar histograms; row i counts the other n - 1 points
/// relative to point i with radii scaled by the mean pairwise distance.
Eigen::MatrixXd shape_context_histograms(std::span<const Point2> points);

/// Edge points used by shape_context: Sobel magnitude >= 0.2 * max, every
/// floor(E / n)-th edge pixel in raster order.
std::vector<Point2> sample_edge_points(const GrayImage& gray, int n_samples);

/// Row-L1-normalised 60-bin shape context descriptors.
DescriptorSet shape_context(const GrayImage& gray, int n_samples = 100);

struct TripletCode {
  std::array<WordId, 3> words{};  // ascending
  int scale_level = 0;

  auto operator<=>(const TripletCode&) const = default;
};

/// Words assigned to each row of the set.
std::vector<WordId> assign_words(const DescriptorSet& set, const Codebook& codebook);

/// Each keypoint joins its two nearest same-level neighbours; duplicate codes
/// are dropped and the result is sorted.
std::vector<TripletCode> group_triplets(const DescriptorSet& set, const Codebook& codebook,
                                        const DogConfig& cfg = {});

inline constexpr int kTripletHashBins = 10007;

/// Histogram of triplet codes hashed into kTripletHashBins bins.
Eigen::VectorXd triplet_histogram(std::span<const TripletCode> codes);

}  // namespace tmr
