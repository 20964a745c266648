#include "tmr/feature_io.hpp"

#include "tmr/errors.hpp"
#include "tmr/serialization.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tmr {

namespace {

constexpr const char* kFeatureMagic = "TMFEAT1";

std::filesystem::path sidecar(const std::filesystem::path& path, const char* suffix) {
  std::filesystem::path p = path;
  p += suffix;
  return p;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(m.row_ids.size()) != m.rows.rows())
    throw Error(ErrorKind::Format, "feature matrix: id count differs from row count");
  if (m.feature_id.empty() || m.feature_id.find_first_of(" \t\n") != std::string::npos)
    throw Error(ErrorKind::InvalidParam, "feature id must be a single non-empty token");
  auto out = open_out(path);
  out << kFeatureMagic << ' ' << m.feature_id << ' ' << m.rows.rows() << ' ' << m.rows.cols() << '\n';
  for (const auto& id : m.row_ids) {
    if (id.find('\n') != std::string::npos) throw Error(ErrorKind::InvalidParam, "doc id contains a newline");
    out << id << '\n';
  }
  write_f32_le(out, std::span<const float>(m.rows.data(), static_cast<std::size_t>(m.rows.size())));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, extra;
  long long n = -1, dim = -1;
  FeatureMatrix m;
  if (!(hs >> magic >> m.feature_id >> n >> dim) || magic != kFeatureMagic || n < 0 || dim < 0 || (hs >> extra))
    throw Error(ErrorKind::Format, "bad feature-matrix header in " + path.string());
  if (n > 0 && dim == 0) throw Error(ErrorKind::Format, "zero-dimensional rows in " + path.string());
  m.row_ids.resize(static_cast<std::size_t>(n));
  for (auto& id : m.row_ids)
    if (!std::getline(in, id)) throw Error(ErrorKind::Format, "truncated id list in " + path.string());
  const std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t row_bytes = static_cast<std::size_t>(dim) * sizeof(float);
  if (row_bytes > 0 && payload.size() % row_bytes != 0)
    throw Error(ErrorKind::DimMismatch, "payload of " + path.string() + " is not a whole number of " +
                                            std::to_string(dim) + "-dim rows");
  if (payload.size() != static_cast<std::size_t>(n) * row_bytes)
    throw Error(ErrorKind::Format, "row count differs from id count in " + path.string());
  m.rows.resize(n, dim);
  std::istringstream ps(std::string(payload.begin(), payload.end()));
  read_f32_le(ps, std::span<float>(m.rows.data(), static_cast<std::size_t>(m.rows.size())));
  if (!m.rows.allFinite()) throw Error(ErrorKind::Format, "non-finite values in " + path.string());
  return m;
}

FeatureMatrix to_feature_matrix(std::span<const DocDescriptor> docs) {
  FeatureMatrix m;
  if (docs.empty()) throw Error(ErrorKind::InvalidParam, "no descriptors to write");
  m.feature_id = docs.front().descriptor.feature_id;
  const Eigen::Index dim = docs.front().descriptor.dim();
  m.rows.resize(static_cast<Eigen::Index>(docs.size()), dim);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].descriptor.dim() != dim) throw Error(ErrorKind::DimMismatch, "mixed descriptor dimensions");
    m.row_ids.push_back(docs[i].doc_id);
    m.rows.row(static_cast<Eigen::Index>(i)) = docs[i].descriptor.values.cast<float>().transpose();
  }
  return m;
}

std::vector<DocDescriptor> to_doc_descriptors(const FeatureMatrix& m) {
  std::vector<DocDescriptor> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < m.row_ids.size(); ++i) {
    if (!seen.insert(m.row_ids[i]).second) throw Error(ErrorKind::DuplicateDoc, "duplicate doc id " + m.row_ids[i]);
    out.push_back({m.row_ids[i],
                   {m.feature_id, m.rows.row(static_cast<Eigen::Index>(i)).transpose().cast<double>()}});
  }
  return out;
}

void write_local_features(std::span<const DocDescriptorSet> docs, const std::string& feature_id,
                          const std::filesystem::path& path) {
  Eigen::Index dim = 0, total = 0;
  for (const auto& d : docs) {
    if (d.set.size() == 0) continue;
    if (dim == 0) dim = d.set.dim();
    if (d.set.dim() != dim) throw Error(ErrorKind::DimMismatch, "mixed descriptor dimensions");
    total += d.set.size();
  }
  FeatureMatrix m{feature_id, {}, DescriptorMatrix(total, dim)};
  auto kp = open_out(sidecar(path, ".kp"));
  auto list = open_out(sidecar(path, ".docs"));
  kp.precision(17);
  Eigen::Index r = 0;
  for (const auto& d : docs) {
    list << d.doc_id << '\n';
    for (Eigen::Index i = 0; i < d.set.size(); ++i, ++r) {
      m.row_ids.push_back(d.doc_id);
      m.rows.row(r) = d.set.vectors.row(i);
      const Keypoint& k = d.set.keypoints[static_cast<std::size_t>(i)];
      kp << k.x << ' ' << k.y << ' ' << k.scale << ' ' << k.orientation << '\n';
    }
  }
  if (!kp || !list) throw Error(ErrorKind::Io, "write failed next to " + path.string());
  write_feature_matrix(m, path);
}

std::vector<DocDescriptorSet> read_local_features(const std::filesystem::path& path) {
  const FeatureMatrix m = read_feature_matrix(path);
  auto kp = open_in(sidecar(path, ".kp"));
  auto list = open_in(sidecar(path, ".docs"));
  std::vector<DocDescriptorSet> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::string id; std::getline(list, id);) {
    if (!slot.emplace(id, out.size()).second) throw Error(ErrorKind::DuplicateDoc, "duplicate doc id " + id);
    out.push_back({id, {m.feature_id, {}, DescriptorMatrix(0, m.rows.cols())}});
  }
  // rows of one doc are contiguous
  std::size_t r = 0;
  while (r < m.row_ids.size()) {
    std::size_t e = r;
    while (e < m.row_ids.size() && m.row_ids[e] == m.row_ids[r]) ++e;
    const auto it = slot.find(m.row_ids[r]);
    if (it == slot.end()) throw Error(ErrorKind::Format, "row id " + m.row_ids[r] + " missing from doc list");
    DescriptorSet& set = out[it->second].set;
    if (set.size() > 0) throw Error(ErrorKind::Format, "rows of " + m.row_ids[r] + " are not contiguous");
    set.vectors = m.rows.middleRows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e - r));
    for (std::size_t i = r; i < e; ++i) {
      Keypoint k;
      if (!(kp >> k.x >> k.y >> k.scale >> k.orientation))
        throw Error(ErrorKind::Format, "keypoint sidecar shorter than feature rows for " + path.string());
      set.keypoints.push_back(k);
    }
    r = e;
  }
  return out;
}

DenseIndex import_external_features(const std::filesystem::path& path) {
  const FeatureMatrix m = read_feature_matrix(path);
  if (m.rows.rows() == 0) throw Error(ErrorKind::Format, "no rows in " + path.string());
  return build_dense(to_doc_descriptors(m), Normalization::None);
}

}  // namespace tmr
