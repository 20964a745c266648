#pragma once

#include "tmr/errors.hpp"
#include "tmr/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace tmr {

enum class MetricId { Euclidean, Cosine, IntersectionL1, IntersectionL2, Quadratic, Manhattan };
enum class Normalization { None, L1, L2 };

std::string_view to_string(MetricId id);
std::string_view to_string(Normalization n);
std::optional<MetricId> parse_metric(std::string_view name);
std::optional<Normalization> parse_normalization(std::string_view name);

/// Symmetric bin-similarity matrix with unit diagonal, entries in [0, 1].
using SimilarityMatrix = Eigen::MatrixXd;

struct Metric {
  MetricId id = MetricId::Euclidean;
  // Only read by the quadratic-form distance.
  std::shared_ptr<const SimilarityMatrix> bin_similarity;

  Metric() = default;
  Metric(MetricId metric) : id(metric) {}  // NOLINT: implicit by intent
  Metric(MetricId metric, std::shared_ptr<const SimilarityMatrix> a)
      : id(metric), bin_similarity(std::move(a)) {}
};

/// Validates shape, symmetry, unit diagonal and [0, 1] range.
void validate_similarity_matrix(const SimilarityMatrix& a);

/// Bin similarity for the 72-bin HSV histogram: A(i, j) = 1 - d_ij / d_max over
/// bin-centre colours in HSV cone coordinates. Positive definite for this layout.
std::shared_ptr<const SimilarityMatrix> hsv72_bin_similarity();

template <typename Derived>
auto normalize(const Eigen::MatrixBase<Derived>& v, Normalization scheme) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out = v;
  Scalar denom = 0;
  switch (scheme) {
    case Normalization::None: return out;
    case Normalization::L1: denom = v.sum(); break;
    case Normalization::L2: denom = v.norm(); break;
  }
  if (denom != Scalar(0)) out /= denom;
  return out;
}

namespace detail {

inline double clamp_nonneg(double v) { return v < 0.0 ? 0.0 : v; }

}  // namespace detail

/// Distance between two descriptors; lower means more similar. Computation is
/// carried out in double regardless of the input scalar type.
template <typename DerivedP, typename DerivedQ>
double distance(const Eigen::MatrixBase<DerivedP>& p_in, const Eigen::MatrixBase<DerivedQ>& q_in,
                const Metric& metric) {
  if (p_in.size() != q_in.size()) throw Error(ErrorKind::DimMismatch, "distance: dimension mismatch");
  const Eigen::VectorXd p = p_in.template cast<double>();
  const Eigen::VectorXd q = q_in.template cast<double>();
  switch (metric.id) {
    case MetricId::Euclidean:
      return (p - q).norm();
    case MetricId::Manhattan:
      return (p - q).cwiseAbs().sum();
    case MetricId::Cosine: {
      const double np = p.norm(), nq = q.norm();
      if (np == 0.0 && nq == 0.0) return 0.0;
      if (np == 0.0 || nq == 0.0) return 1.0;
      return detail::clamp_nonneg(1.0 - (p / np).dot(q / nq));
    }
    case MetricId::IntersectionL1: {
      const double denom = std::min(p.cwiseAbs().sum(), q.cwiseAbs().sum());
      if (denom == 0.0) return p.isZero(0) && q.isZero(0) ? 0.0 : 1.0;
      return detail::clamp_nonneg(1.0 - p.cwiseMin(q).sum() / denom);
    }
    case MetricId::IntersectionL2:
      return detail::clamp_nonneg(1.0 - std::sqrt(p.cwiseAbs2().cwiseMin(q.cwiseAbs2()).sum()));
    case MetricId::Quadratic: {
      if (!metric.bin_similarity) throw Error(ErrorKind::InvalidParam, "quadratic distance needs a bin-similarity matrix");
      const auto& a = *metric.bin_similarity;
      if (a.rows() != p.size() || a.cols() != p.size())
        throw Error(ErrorKind::DimMismatch, "quadratic distance: matrix size mismatch");
      const Eigen::VectorXd d = p - q;
      return d.dot(a * d);
    }
  }
  return 0.0;
}

}  // namespace tmr
