#pragma once

#include "tmr/codebook.hpp"
#include "tmr/evaluation.hpp"
#include "tmr/feature_io.hpp"
#include "tmr/global_features.hpp"
#include "tmr/keypoint_features.hpp"
#include "tmr/metrics.hpp"
#include "tmr/textmask.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmr {

enum class FeatureFamily { Hsv72, Rgb64, Rgb512, Lbp, Gist, TriSift, Sift, OrSift, Hog, ShapeContext, External };

std::string_view to_string(FeatureFamily f);
std::optional<FeatureFamily> parse_feature_family(std::string_view name);

/// Families extracted as per-image local descriptor sets (Tri-SIFT included,
/// it is built from SIFT descriptors).
bool is_local(FeatureFamily f);
/// Families ranked through a codebook and an inverted file.
bool is_bovw(FeatureFamily f);

struct FeatureConfig {
  FeatureFamily family = FeatureFamily::Hsv72;
  LbpParams lbp;
  int hog_cell = 8;
  int shape_samples = 100;
  bool strip_text = false;  // drop keypoints inside detected text (local families)
  bool autocrop = false;
};

/// Global descriptor of one image.
DenseDescriptor extract_global(const RasterImage& img, const FeatureConfig& cfg);

/// Local descriptors of one image. Shape context on an image with too few
/// edges yields an empty set. With strip_text set, the detected text boxes
/// are stored in `text_boxes` when given.
DescriptorSet extract_local(const RasterImage& img, const FeatureConfig& cfg,
                            std::vector<TextBox>* text_boxes = nullptr);

/// Default normalisation and metric per family.
Normalization default_normalization(FeatureFamily f);
MetricId default_metric(FeatureFamily f);

/// Metric object for a name, attaching the HSV bin-similarity matrix for the
/// quadratic distance.
Metric make_metric(MetricId id, FeatureFamily f);

struct CodebookConfig {
  int k = 200;
  int max_iters = 30;
  std::size_t max_samples = 500000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

/// Trains on a reservoir sample of the corpus descriptors.
Codebook train_codebook(std::span<const DocDescriptorSet> corpus, const CodebookConfig& cfg,
                        const std::string& feature_id);

/// Dense pipeline from corpus descriptors and descriptors of the query-set
/// images.
std::shared_ptr<RetrievalPipeline> make_dense_pipeline(std::string name, std::span<const DocDescriptor> corpus,
                                                       std::span<const DocDescriptor> queries,
                                                       Normalization normalization, const Metric& metric);

/// tf-idf inverted-file pipeline; idf comes from the corpus alone.
std::shared_ptr<RetrievalPipeline> make_bovw_pipeline(std::string name, std::span<const DocDescriptorSet> corpus,
                                                      std::span<const DocDescriptorSet> queries,
                                                      const Codebook& codebook);

/// Inverted file built from the corpus sets (saved by the `index` command).
InvertedIndex build_bovw_index(std::span<const DocDescriptorSet> corpus, const Codebook& codebook,
                               std::uint64_t build_seed = 0);

/// Hashed triplet-code histograms of SIFT sets.
std::vector<DocDescriptor> trisift_descriptors(std::span<const DocDescriptorSet> sets, const Codebook& codebook);

}  // namespace tmr
