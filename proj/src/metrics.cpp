#include "tmr/metrics.hpp"

#include "tmr/global_features.hpp"

#include <numbers>

namespace tmr {

std::string_view to_string(MetricId id) {
  switch (id) {
    case MetricId::Euclidean: return "euclidean";
    case MetricId::Cosine: return "cosine";
    case MetricId::IntersectionL1: return "intersection_l1";
    case MetricId::IntersectionL2: return "intersection_l2";
    case MetricId::Quadratic: return "quadratic";
    case MetricId::Manhattan: return "manhattan";
  }
  return "euclidean";
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::L1: return "l1";
    case Normalization::L2: return "l2";
  }
  return "none";
}

std::optional<MetricId> parse_metric(std::string_view name) {
  for (auto id : {MetricId::Euclidean, MetricId::Cosine, MetricId::IntersectionL1, MetricId::IntersectionL2,
                  MetricId::Quadratic, MetricId::Manhattan})
    if (to_string(id) == name) return id;
  return std::nullopt;
}

std::optional<Normalization> parse_normalization(std::string_view name) {
  for (auto n : {Normalization::None, Normalization::L1, Normalization::L2})
    if (to_string(n) == name) return n;
  return std::nullopt;
}

void validate_similarity_matrix(const SimilarityMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidParam, "similarity matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorKind::InvalidParam, "similarity matrix must be symmetric");
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (std::abs(a(i, i) - 1.0) > 1e-12) throw Error(ErrorKind::InvalidParam, "similarity matrix needs a unit diagonal");
  if (a.minCoeff() < 0.0 || a.maxCoeff() > 1.0)
    throw Error(ErrorKind::InvalidParam, "similarity matrix entries must lie in [0, 1]");
}

std::shared_ptr<const SimilarityMatrix> hsv72_bin_similarity() {
  static const auto matrix = [] {
    Eigen::Matrix<double, kHsv72Dim, 3> cone;
    for (int b = 0; b < kHsv72Dim; ++b) {
      const Hsv c = hsv72_bin_center(b);
      const double rad = c.h * std::numbers::pi / 180.0;
      cone.row(b) << c.s * c.v * std::cos(rad), c.s * c.v * std::sin(rad), c.v;
    }
    SimilarityMatrix d(kHsv72Dim, kHsv72Dim);
    for (int i = 0; i < kHsv72Dim; ++i)
      for (int j = 0; j < kHsv72Dim; ++j) d(i, j) = (cone.row(i) - cone.row(j)).norm();
    const double dmax = d.maxCoeff();
    auto a = std::make_shared<SimilarityMatrix>(SimilarityMatrix::Ones(kHsv72Dim, kHsv72Dim) - d / dmax);
    return std::shared_ptr<const SimilarityMatrix>(std::move(a));
  }();
  return matrix;
}

}  // namespace tmr
