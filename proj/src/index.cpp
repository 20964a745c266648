#include "tmr/index.hpp"

#include "tmr/errors.hpp"
#include "tmr/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace tmr {

Ranking make_ranking(std::string query_id, std::span<const std::string> doc_ids, std::span<const double> scores,
                     std::optional<std::size_t> top_m) {
  std::vector<std::size_t> order(doc_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return doc_ids[a] < doc_ids[b];
  };
  const std::size_t keep = std::min(order.size(), top_m.value_or(order.size()));
  if (keep < order.size()) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
    order.resize(keep);
  } else {
    std::sort(order.begin(), order.end(), better);
  }
  Ranking r;
  r.query_id = std::move(query_id);
  r.entries.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    r.entries.push_back({doc_ids[order[i]], scores[order[i]], static_cast<double>(i + 1)});
  return r;
}

namespace {

void check_unique(std::span<const std::string> ids) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty() || id.find('\n') != std::string::npos)
      throw Error(ErrorKind::Format, "doc id must be non-empty and single-line");
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateDoc, "duplicate doc id: " + id);
  }
}

}  // namespace

DenseIndex build_dense(std::span<const DocDescriptor> docs, Normalization normalization, std::uint64_t build_seed) {
  DenseIndex idx;
  idx.normalization = normalization;
  idx.build_seed = build_seed;
  if (docs.empty()) return idx;
  idx.feature_id = docs.front().descriptor.feature_id;
  const Eigen::Index dim = docs.front().descriptor.dim();
  idx.rows.resize(static_cast<Eigen::Index>(docs.size()), dim);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& d = docs[i].descriptor;
    if (d.dim() != dim) throw Error(ErrorKind::DimMismatch, "build_dense: descriptor dimensions differ");
    if (d.feature_id != idx.feature_id) throw Error(ErrorKind::InvalidParam, "build_dense: mixed feature ids");
    idx.rows.row(static_cast<Eigen::Index>(i)) = normalize(d.values, normalization).cast<float>().transpose();
    idx.doc_ids.push_back(docs[i].doc_id);
  }
  check_unique(idx.doc_ids);
  return idx;
}

std::vector<double> dense_scores(const DenseIndex& idx, const Eigen::VectorXd& q, const Metric& metric) {
  std::vector<double> scores(idx.size());
  if (idx.size() == 0) return scores;
  if (q.size() != idx.dim()) throw Error(ErrorKind::DimMismatch, "query dimension does not match index");
  const Eigen::VectorXf qn = normalize(q, idx.normalization).cast<float>();
  for (std::size_t i = 0; i < idx.size(); ++i)
    scores[i] = distance(qn, idx.rows.row(static_cast<Eigen::Index>(i)).transpose(), metric);
  return scores;
}

Ranking query_dense(const DenseIndex& idx, const DenseDescriptor& q, const Metric& metric,
                    std::optional<std::size_t> top_m, std::string query_id) {
  const auto scores = dense_scores(idx, q.values, metric);
  return make_ranking(std::move(query_id), idx.doc_ids, scores, top_m);
}

std::size_t InvertedIndex::posting_count() const {
  std::size_t n = 0;
  for (const auto& p : postings) n += p.size();
  return n;
}

InvertedIndex build_inverted(std::span<const DocBoVW> docs, std::size_t vocabulary_size, IdfModel idf,
                             std::uint64_t build_seed) {
  InvertedIndex idx;
  idx.postings.resize(vocabulary_size);
  idx.idf = std::move(idf);
  idx.build_seed = build_seed;
  idx.doc_ids.reserve(docs.size());
  idx.norms.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    idx.doc_ids.push_back(docs[d].doc_id);
    for (const auto& [w, v] : docs[d].vector.entries) {
      if (w >= vocabulary_size) throw Error(ErrorKind::InvalidParam, "build_inverted: word id out of range");
      if (!(v > 0.0f)) throw Error(ErrorKind::InvalidParam, "build_inverted: weights must be positive");
      idx.postings[w].push_back({static_cast<DocIndex>(d), v});
    }
    idx.norms.push_back(bovw_norm(docs[d].vector.entries));
  }
  check_unique(idx.doc_ids);
  return idx;
}

std::vector<double> inverted_scores(const InvertedIndex& idx, const BoVWVector& q) {
  const std::size_t n = idx.size();
  const double qn = bovw_norm(q.entries);
  // unit-normalise each factor before multiplying so equal directions score identically
  std::vector<double> dot(n, 0.0);
  for (const auto& [w, qv] : q.entries) {
    if (w >= idx.vocabulary_size()) continue;
    const double qu = static_cast<double>(qv) / qn;
    for (const Posting& p : idx.postings[w]) dot[p.doc] += qu * (static_cast<double>(p.weight) / idx.norms[p.doc]);
  }
  std::vector<double> scores(n, 1.0);
  for (std::size_t d = 0; d < n; ++d) {
    const double dn = idx.norms[d];
    if (qn == 0.0 && dn == 0.0) {
      scores[d] = 0.0;
    } else if (qn > 0.0 && dn > 0.0) {
      scores[d] = std::max(0.0, 1.0 - dot[d]);
    }
  }
  return scores;
}

double sparse_cosine_distance(const BoVWVector& a, const BoVWVector& b) {
  const double an = bovw_norm(a.entries), bn = bovw_norm(b.entries);
  if (an == 0.0 && bn == 0.0) return 0.0;
  if (an == 0.0 || bn == 0.0) return 1.0;
  double dot = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      dot += (static_cast<double>(i->second) / an) * (static_cast<double>(j->second) / bn);
      ++i;
      ++j;
    }
  }
  return std::max(0.0, 1.0 - dot);
}

Ranking query_inverted(const InvertedIndex& idx, const BoVWVector& q, std::optional<std::size_t> top_m,
                       std::string query_id) {
  const auto scores = inverted_scores(idx, q);
  return make_ranking(std::move(query_id), idx.doc_ids, scores, top_m);
}

// ---- persistence -------------------------------------------------------------

namespace {

constexpr const char* kIndexMagic = "TMIDX1";

struct IndexHeader {
  std::string kind, feature_id, normalization;
  std::uint64_t width = 0, count = 0, seed = 0;
};

void write_header(std::ostream& out, const IndexHeader& h, std::span<const std::string> ids) {
  out << kIndexMagic << ' ' << h.kind << ' ' << h.feature_id << ' ' << h.width << ' ' << h.count << ' '
      << h.normalization << ' ' << h.seed << '\n';
  for (const auto& id : ids) out << id << '\n';
}

IndexHeader read_header(std::istream& in, const std::filesystem::path& path, std::vector<std::string>* ids) {
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic;
  IndexHeader h;
  if (!(hs >> magic >> h.kind >> h.feature_id >> h.width >> h.count >> h.normalization >> h.seed) ||
      magic != kIndexMagic)
    throw Error(ErrorKind::Format, "bad index header in " + path.string());
  if (ids) {
    ids->resize(h.count);
    for (auto& id : *ids)
      if (!std::getline(in, id)) throw Error(ErrorKind::Format, "truncated doc id list in " + path.string());
  }
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

void save_index(const DenseIndex& idx, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_header(out,
               {"dense", idx.feature_id.empty() ? "-" : idx.feature_id, std::string(to_string(idx.normalization)),
                static_cast<std::uint64_t>(idx.dim()), idx.size(), idx.build_seed},
               idx.doc_ids);
  write_le(out, std::span<const float>(idx.rows.data(), static_cast<std::size_t>(idx.rows.size())));
}

void save_index(const InvertedIndex& idx, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_header(out,
               {"inverted", idx.feature_id.empty() ? "-" : idx.feature_id, "tfidf", idx.vocabulary_size(),
                idx.size(), idx.build_seed},
               idx.doc_ids);
  std::vector<std::uint64_t> df = idx.idf.doc_freq;
  std::vector<double> idf = idx.idf.idf;
  df.resize(idx.vocabulary_size(), 0);
  idf.resize(idx.vocabulary_size(), 0.0);
  write_scalar_le<std::uint64_t>(out, idx.idf.doc_count);
  write_le(out, std::span<const std::uint64_t>(df));
  write_le(out, std::span<const double>(idf));
  for (const auto& list : idx.postings) {
    write_scalar_le<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
    for (const Posting& p : list) {
      write_scalar_le<std::uint32_t>(out, p.doc);
      write_scalar_le<float>(out, p.weight);
    }
  }
  write_le(out, std::span<const double>(idx.norms));
}

std::string index_kind(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_header(in, path, nullptr).kind;
}

DenseIndex load_dense_index(const std::filesystem::path& path) {
  auto in = open_in(path);
  DenseIndex idx;
  const IndexHeader h = read_header(in, path, &idx.doc_ids);
  if (h.kind != "dense") throw Error(ErrorKind::Format, path.string() + " is not a dense index");
  const auto norm = parse_normalization(h.normalization);
  if (!norm) throw Error(ErrorKind::Format, "unknown normalization in " + path.string());
  idx.feature_id = h.feature_id == "-" ? std::string{} : h.feature_id;
  idx.normalization = *norm;
  idx.build_seed = h.seed;
  idx.rows.resize(static_cast<Eigen::Index>(h.count), static_cast<Eigen::Index>(h.width));
  read_le(in, std::span<float>(idx.rows.data(), static_cast<std::size_t>(idx.rows.size())));
  return idx;
}

InvertedIndex load_inverted_index(const std::filesystem::path& path) {
  auto in = open_in(path);
  InvertedIndex idx;
  const IndexHeader h = read_header(in, path, &idx.doc_ids);
  if (h.kind != "inverted") throw Error(ErrorKind::Format, path.string() + " is not an inverted index");
  idx.feature_id = h.feature_id == "-" ? std::string{} : h.feature_id;
  idx.build_seed = h.seed;
  idx.idf.doc_count = read_scalar_le<std::uint64_t>(in);
  idx.idf.doc_freq.resize(h.width);
  idx.idf.idf.resize(h.width);
  read_le(in, std::span<std::uint64_t>(idx.idf.doc_freq));
  read_le(in, std::span<double>(idx.idf.idf));
  idx.postings.resize(h.width);
  for (auto& list : idx.postings) {
    const auto n = read_scalar_le<std::uint32_t>(in);
    list.resize(n);
    for (auto& p : list) {
      p.doc = read_scalar_le<std::uint32_t>(in);
      p.weight = read_scalar_le<float>(in);
      if (p.doc >= h.count) throw Error(ErrorKind::Format, "posting refers to unknown doc in " + path.string());
    }
  }
  idx.norms.resize(h.count);
  read_le(in, std::span<double>(idx.norms));
  return idx;
}

}  // namespace tmr
