#pragma once

#include "tmr/codebook.hpp"
#include "tmr/global_features.hpp"
#include "tmr/metrics.hpp"
#include "tmr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tmr {

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;  // distance; lower is more similar
  double rank = 0.0;   // 1-based; fractional after tie averaging or fusion input
};

struct Ranking {
  std::string query_id;
  std::vector<RankedDoc> entries;
};

/// Sorts by ascending score, then ascending doc id, and assigns ranks 1..n.
/// With top_m set only the best top_m entries are kept.
Ranking make_ranking(std::string query_id, std::span<const std::string> doc_ids, std::span<const double> scores,
                     std::optional<std::size_t> top_m = std::nullopt);

// ---- dense scan ----------------------------------------------------------------

struct DocDescriptor {
  std::string doc_id;
  DenseDescriptor descriptor;
};

struct DenseIndex {
  std::string feature_id;
  std::vector<std::string> doc_ids;
  DescriptorMatrix rows;  // one normalised descriptor per doc
  Normalization normalization = Normalization::None;
  std::uint64_t build_seed = 0;

  std::size_t size() const { return doc_ids.size(); }
  Eigen::Index dim() const { return rows.cols(); }
};

DenseIndex build_dense(std::span<const DocDescriptor> docs, Normalization normalization,
                       std::uint64_t build_seed = 0);

/// Distance from q (normalised like the index) to every indexed doc, in doc order.
std::vector<double> dense_scores(const DenseIndex& idx, const Eigen::VectorXd& q, const Metric& metric);

Ranking query_dense(const DenseIndex& idx, const DenseDescriptor& q, const Metric& metric,
                    std::optional<std::size_t> top_m = std::nullopt, std::string query_id = {});

// ---- inverted file -------------------------------------------------------------

struct Posting {
  DocIndex doc = 0;
  float weight = 0.0f;
};

struct DocBoVW {
  std::string doc_id;
  BoVWVector vector;
};

struct InvertedIndex {
  std::string feature_id;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<Posting>> postings;  // per word, sorted by doc
  std::vector<double> norms;                   // per doc
  IdfModel idf;                                // weighting applied to queries
  std::uint64_t build_seed = 0;

  std::size_t size() const { return doc_ids.size(); }
  std::size_t vocabulary_size() const { return postings.size(); }
  std::size_t posting_count() const;
};

InvertedIndex build_inverted(std::span<const DocBoVW> docs, std::size_t vocabulary_size, IdfModel idf = {},
                             std::uint64_t build_seed = 0);

/// Cosine distance from q to every doc, accumulating only over q's words.
std::vector<double> inverted_scores(const InvertedIndex& idx, const BoVWVector& q);

/// Cosine distance between two sparse vectors, matching inverted_scores.
double sparse_cosine_distance(const BoVWVector& a, const BoVWVector& b);

Ranking query_inverted(const InvertedIndex& idx, const BoVWVector& q, std::optional<std::size_t> top_m = std::nullopt,
                       std::string query_id = {});

// ---- persistence ("TMIDX1") -------------------------------------------------

void save_index(const DenseIndex& idx, const std::filesystem::path& path);
void save_index(const InvertedIndex& idx, const std::filesystem::path& path);
DenseIndex load_dense_index(const std::filesystem::path& path);
InvertedIndex load_inverted_index(const std::filesystem::path& path);
/// "dense" or "inverted", read from the header.
std::string index_kind(const std::filesystem::path& path);

}  // namespace tmr
