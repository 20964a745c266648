#pragma once

#include "tmr/pipeline.hpp"
#include "tmr/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tmr {

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::string name;
  FeatureConfig feature;
  Normalization normalization = Normalization::None;
  MetricId metric = MetricId::Cosine;
  CodebookConfig codebook;
  std::vector<std::string> fuse;  // constituent pipeline names; non-empty for fusion
  std::filesystem::path corpus_features;  // external family only
  std::filesystem::path query_features;

  bool is_fusion() const { return !fuse.empty(); }
  /// Pipelines that read images (not fusion, not external).
  bool extracts() const { return !is_fusion() && feature.family != FeatureFamily::External; }
  bool needs_codebook() const { return extracts() && is_local(feature.family); }
};

/// Line-based `key = value` configuration with [section] headers:
///   [run]          corpus, manifest, output, seed, jobs
///   [synth]        seed, distractors | text_only/figure_only/combined, groups,
///                  members_per_group, image_size, scale, rotation,
///                  contrast_inversion, text_contamination, inverted_duplicate,
///                  group_text, output
///   [codebook]     k, max_iters, max_samples, seed
///   [pipeline.N]   feature, normalization, metric, strip_text, autocrop,
///                  lbp_variant, lbp_neighbors, lbp_radius, hog_cell,
///                  shape_samples, k, max_iters, max_samples, seed,
///                  corpus_features, query_features, fuse
/// Relative paths resolve against the directory holding the file.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path manifest;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  bool has_synth = false;
  SynthSpec synth;
  std::filesystem::path synth_output;
  CodebookConfig codebook;
  std::vector<PipelineConfig> pipelines;  // file order
  std::string hash;                       // FNV-1a of the canonical key listing

  const PipelineConfig& pipeline(std::string_view name) const;
};

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace tmr
