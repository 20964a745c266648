#pragma once

#include "tmr/keypoint_features.hpp"
#include "tmr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tmr {

/// k-means visual vocabulary; row i of `centroids` is word i.
struct Codebook {
  std::string feature_id;
  RowMatrix<double> centroids;
  std::uint64_t seed = 0;

  Eigen::Index k() const { return centroids.rows(); }
  Eigen::Index dim() const { return centroids.cols(); }
};

struct KMeansOptions {
  int k = 8;
  int max_iters = 50;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct KMeansResult {
  Codebook codebook;
  std::vector<WordId> assignment;
  std::vector<double> objective;  // sum of squared distances after each assignment step
  int iterations = 0;
  bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing. Empty clusters are moved to the sample farthest from its centroid.
KMeansResult train_kmeans(const DescriptorMatrix& samples, const KMeansOptions& options,
                          std::string feature_id = {});

/// Nearest centroid by squared Euclidean distance; the lowest id wins ties.
template <typename Derived>
WordId nearest_word(const Codebook& cb, const Eigen::MatrixBase<Derived>& row) {
  const Eigen::RowVectorXd x = row.template cast<double>();
  WordId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index w = 0; w < cb.k(); ++w) {
    const double d = (cb.centroids.row(w) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<WordId>(w);
    }
  }
  return best;
}

using TermCounts = std::map<WordId, std::uint32_t>;

TermCounts quantize(const DescriptorSet& set, const Codebook& cb);

struct IdfModel {
  std::uint64_t doc_count = 0;
  std::vector<std::uint64_t> doc_freq;  // per word
  std::vector<double> idf;              // ln(N / df), 0 when df is 0 or N

  double at(WordId w) const { return w < idf.size() ? idf[w] : 0.0; }
};

IdfModel compute_idf(std::span<const TermCounts> corpus_counts, std::size_t vocabulary_size);

/// Sparse tf-idf vector; entries sorted by word id, weights stored as float.
struct BoVWVector {
  std::vector<std::pair<WordId, float>> entries;
  double norm = 0.0;
};

/// Recomputes the cached norm from the stored weights in word order.
double bovw_norm(std::span<const std::pair<WordId, float>> entries);

BoVWVector tfidf_weight(const TermCounts& counts, const IdfModel& idf);

Eigen::VectorXd densify(const BoVWVector& v, std::size_t vocabulary_size);

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// Reservoir sample of at most `max_rows` rows, stable for a given seed.
DescriptorMatrix reservoir_sample(std::span<const DescriptorMatrix* const> sources, std::size_t max_rows,
                                  std::uint64_t seed);

}  // namespace tmr
