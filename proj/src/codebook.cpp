#include "tmr/codebook.hpp"

#include "tmr/errors.hpp"
#include "tmr/parallel.hpp"
#include "tmr/serialization.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tmr {

namespace {

struct Assignment {
  WordId word = 0;
  double dist = 0.0;  // squared
};

Assignment nearest(const RowMatrix<double>& centroids, const Eigen::RowVectorXd& x) {
  Assignment best{0, std::numeric_limits<double>::infinity()};
  for (Eigen::Index w = 0; w < centroids.rows(); ++w) {
    const double d = (centroids.row(w) - x).squaredNorm();
    if (d < best.dist) best = {static_cast<WordId>(w), d};
  }
  return best;
}

RowMatrix<double> kmeanspp_seed(const RowMatrix<double>& x, int k, std::mt19937_64& rng) {
  const Eigen::Index m = x.rows();
  RowMatrix<double> c(k, x.cols());
  std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(m), false);
  std::uniform_int_distribution<Eigen::Index> first(0, m - 1);
  Eigen::Index pick = first(rng);
  for (int j = 0; j < k; ++j) {
    if (j > 0) {
      double total = 0.0;
      for (double d : d2) total += d;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        pick = m - 1;
        for (Eigen::Index i = 0; i < m; ++i) {
          target -= d2[i];
          if (target < 0.0 && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
        if (d2[pick] == 0.0) {
          for (Eigen::Index i = m - 1; i >= 0; --i)
            if (d2[i] > 0.0) {
              pick = i;
              break;
            }
        }
      } else {
        // every sample already coincides with a centroid
        pick = 0;
        while (pick < m - 1 && chosen[pick]) ++pick;
      }
    }
    chosen[pick] = true;
    c.row(j) = x.row(pick);
    for (Eigen::Index i = 0; i < m; ++i) d2[i] = std::min(d2[i], (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

}  // namespace

KMeansResult train_kmeans(const DescriptorMatrix& samples, const KMeansOptions& options, std::string feature_id) {
  const Eigen::Index m = samples.rows();
  const int k = options.k;
  if (k < 1) throw Error(ErrorKind::InvalidParam, "kmeans: k must be >= 1");
  if (samples.cols() < 1) throw Error(ErrorKind::InvalidParam, "kmeans: samples need at least one dimension");
  if (m < k) throw Error(ErrorKind::TooFewSamples, "kmeans: fewer samples than clusters");

  const RowMatrix<double> x = samples.cast<double>();
  std::mt19937_64 rng(options.seed);
  RowMatrix<double> centroids = kmeanspp_seed(x, k, rng);

  KMeansResult result;
  std::vector<Assignment> assign(static_cast<std::size_t>(m));
  std::vector<WordId> previous;
  for (int it = 0; it < options.max_iters; ++it) {
    parallel_for(static_cast<std::size_t>(m), options.jobs,
                 [&](std::size_t i) { assign[i] = nearest(centroids, x.row(static_cast<Eigen::Index>(i))); });
    double objective = 0.0;
    std::vector<WordId> current(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < assign.size(); ++i) {
      objective += assign[i].dist;
      current[i] = assign[i].word;
    }
    result.objective.push_back(objective);
    result.iterations = it + 1;
    if (current == previous) {
      result.converged = true;
      break;
    }
    previous = std::move(current);

    RowMatrix<double> sums = RowMatrix<double>::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(assign[i].word) += x.row(i);
      ++counts[assign[i].word];
    }
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        centroids.row(j) = sums.row(j) / static_cast<double>(counts[j]);
        continue;
      }
      // empty cluster: move it onto the worst-served sample
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < m; ++i)
        if (!taken[i] && (far < 0 || assign[i].dist > assign[far].dist)) far = i;
      taken[far] = true;
      centroids.row(j) = x.row(far);
      assign[far].dist = 0.0;
    }
  }
  result.codebook = {std::move(feature_id), std::move(centroids), options.seed};
  result.assignment = std::move(previous);
  if (result.assignment.empty()) {
    result.assignment.resize(assign.size());
    for (std::size_t i = 0; i < assign.size(); ++i) result.assignment[i] = assign[i].word;
  }
  return result;
}

TermCounts quantize(const DescriptorSet& set, const Codebook& cb) {
  TermCounts counts;
  if (set.size() == 0) return counts;
  if (set.dim() != cb.dim()) throw Error(ErrorKind::DimMismatch, "quantize: descriptor and codebook dimensions differ");
  for (Eigen::Index i = 0; i < set.size(); ++i) ++counts[nearest_word(cb, set.vectors.row(i))];
  return counts;
}

IdfModel compute_idf(std::span<const TermCounts> corpus_counts, std::size_t vocabulary_size) {
  IdfModel model;
  model.doc_count = corpus_counts.size();
  model.doc_freq.assign(vocabulary_size, 0);
  model.idf.assign(vocabulary_size, 0.0);
  for (const auto& doc : corpus_counts)
    for (const auto& [word, count] : doc)
      if (count > 0 && word < vocabulary_size) ++model.doc_freq[word];
  const double n = static_cast<double>(model.doc_count);
  for (std::size_t w = 0; w < vocabulary_size; ++w) {
    const auto df = model.doc_freq[w];
    model.idf[w] = (df == 0 || df == model.doc_count) ? 0.0 : std::log(n / static_cast<double>(df));
  }
  return model;
}

double bovw_norm(std::span<const std::pair<WordId, float>> entries) {
  double sq = 0.0;
  for (const auto& [w, v] : entries) sq += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sq);
}

BoVWVector tfidf_weight(const TermCounts& counts, const IdfModel& idf) {
  BoVWVector out;
  std::uint64_t total = 0;
  for (const auto& [w, c] : counts) total += c;
  if (total == 0) return out;
  for (const auto& [w, c] : counts) {
    const double weight = static_cast<double>(c) / static_cast<double>(total) * idf.at(w);
    const float stored = static_cast<float>(weight);
    if (stored > 0.0f) out.entries.emplace_back(w, stored);
  }
  out.norm = bovw_norm(out.entries);
  return out;
}

Eigen::VectorXd densify(const BoVWVector& v, std::size_t vocabulary_size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_size));
  for (const auto& [w, x] : v.entries) out[w] = x;
  return out;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  if (cb.feature_id.find_first_of(" \t\n") != std::string::npos)
    throw Error(ErrorKind::InvalidParam, "codebook feature id must not contain whitespace");
  out << "TMCB1 " << (cb.feature_id.empty() ? "-" : cb.feature_id) << ' ' << cb.k() << ' ' << cb.dim() << ' ' << cb.seed << '\n';
  const RowMatrix<float> payload = cb.centroids.cast<float>();
  write_f32_le(out, std::span<const float>(payload.data(), static_cast<std::size_t>(payload.size())));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  Codebook cb;
  Eigen::Index k = 0, dim = 0;
  if (!(hs >> magic >> cb.feature_id >> k >> dim >> cb.seed) || magic != "TMCB1" || k < 1 || dim < 1)
    throw Error(ErrorKind::Format, "bad codebook header in " + path.string());
  if (cb.feature_id == "-") cb.feature_id.clear();
  RowMatrix<float> payload(k, dim);
  read_f32_le(in, std::span<float>(payload.data(), static_cast<std::size_t>(payload.size())));
  cb.centroids = payload.cast<double>();
  return cb;
}

DescriptorMatrix reservoir_sample(std::span<const DescriptorMatrix* const> sources, std::size_t max_rows,
                                  std::uint64_t seed) {
  Eigen::Index dim = 0;
  std::size_t total = 0;
  for (const auto* s : sources) {
    if (s->rows() == 0) continue;
    if (dim == 0) dim = s->cols();
    if (s->cols() != dim) throw Error(ErrorKind::DimMismatch, "reservoir: mixed descriptor dimensions");
    total += static_cast<std::size_t>(s->rows());
  }
  const std::size_t keep = std::min(total, max_rows);
  DescriptorMatrix out(static_cast<Eigen::Index>(keep), dim);
  std::mt19937_64 rng(seed);
  std::size_t seen = 0;
  for (const auto* s : sources)
    for (Eigen::Index r = 0; r < s->rows(); ++r, ++seen) {
      if (seen < keep) {
        out.row(static_cast<Eigen::Index>(seen)) = s->row(r);
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, seen);
      const std::size_t j = pick(rng);
      if (j < keep) out.row(static_cast<Eigen::Index>(j)) = s->row(r);
    }
  return out;
}

}  // namespace tmr
