#pragma once

#include "tmr/index.hpp"
#include "tmr/keypoint_features.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tmr {

/// Contents of a "TMFEAT1 <feature_id> <n_rows> <dim>" file: one id line per
/// row followed by a row-major little-endian float32 payload.
struct FeatureMatrix {
  std::string feature_id;
  std::vector<std::string> row_ids;
  DescriptorMatrix rows;
};

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

FeatureMatrix to_feature_matrix(std::span<const DocDescriptor> docs);
/// One descriptor per row; ids must be unique.
std::vector<DocDescriptor> to_doc_descriptors(const FeatureMatrix& m);

struct DocDescriptorSet {
  std::string doc_id;
  DescriptorSet set;
};

/// Local descriptors: rows of every doc in order, ids repeated per row. Two
/// sidecars are written next to `path`: "<path>.kp" with "x y scale
/// orientation" per row and "<path>.docs" listing every doc (including docs
/// with no rows) in order.
void write_local_features(std::span<const DocDescriptorSet> docs, const std::string& feature_id,
                          const std::filesystem::path& path);
std::vector<DocDescriptorSet> read_local_features(const std::filesystem::path& path);

/// Loads externally computed global features as an unnormalised dense index
/// meant for cosine scoring.
DenseIndex import_external_features(const std::filesystem::path& path);

}  // namespace tmr
