#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tmr/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>
#include <random>

using namespace tmr;

namespace {

const MetricId kAll[] = {MetricId::Euclidean,      MetricId::Cosine,   MetricId::IntersectionL1,
                         MetricId::IntersectionL2, MetricId::Manhattan};

Eigen::VectorXd random_vec(std::mt19937_64& rng, int n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("normalize") {
  CHECK(normalize(Eigen::Vector2d(2, 2), Normalization::L1).isApprox(Eigen::Vector2d(0.5, 0.5)));
  CHECK(normalize(Eigen::Vector2d(3, 4), Normalization::L2).isApprox(Eigen::Vector2d(0.6, 0.8)));
  for (auto n : {Normalization::None, Normalization::L1, Normalization::L2})
    CHECK(normalize(Eigen::VectorXd::Zero(5), n) == Eigen::VectorXd::Zero(5));
  const Eigen::VectorXf f = normalize(Eigen::Vector3f(1, 1, 2), Normalization::L1);
  CHECK(f.sum() == doctest::Approx(1.0));
}

TEST_CASE("names round-trip") {
  for (auto m : {MetricId::Euclidean, MetricId::Cosine, MetricId::IntersectionL1, MetricId::IntersectionL2,
                 MetricId::Quadratic, MetricId::Manhattan})
    CHECK(parse_metric(to_string(m)) == m);
  for (auto n : {Normalization::None, Normalization::L1, Normalization::L2}) CHECK(parse_normalization(to_string(n)) == n);
  CHECK_FALSE(parse_metric("chebyshev").has_value());
  CHECK(to_string(MetricId::IntersectionL1) == "intersection_l1");
}

TEST_CASE("distance examples") {
  const Eigen::Vector3d h = Eigen::Vector3d(0.2, 0.3, 0.5);
  CHECK(distance(h, h, MetricId::IntersectionL1) == 0.0);
  CHECK(distance(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), MetricId::Cosine) == doctest::Approx(1.0));
  auto identity = std::make_shared<const SimilarityMatrix>(SimilarityMatrix::Identity(2, 2));
  CHECK(distance(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Metric(MetricId::Quadratic, identity)) ==
        doctest::Approx(2.0));
  CHECK(distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4), MetricId::Euclidean) == doctest::Approx(5.0));
  CHECK(distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, -4), MetricId::Manhattan) == doctest::Approx(7.0));
  // intersection_l2 on unit-L2 vectors: 1 - sqrt(sum min(p^2, q^2))
  CHECK(distance(Eigen::Vector2d(0.6, 0.8), Eigen::Vector2d(0.8, 0.6), MetricId::IntersectionL2) ==
        doctest::Approx(1.0 - std::sqrt(0.36 + 0.36)));
}

TEST_CASE("zero-norm cosine convention") {
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(4), v = Eigen::VectorXd::Ones(4);
  CHECK(distance(z, z, MetricId::Cosine) == 0.0);
  CHECK(distance(z, v, MetricId::Cosine) == 1.0);
  CHECK(distance(v, z, MetricId::Cosine) == 1.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(distance(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4), MetricId::Euclidean), Error);
  CHECK_THROWS_AS(distance(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), MetricId::Quadratic), Error);
  auto a = std::make_shared<const SimilarityMatrix>(SimilarityMatrix::Identity(2, 2));
  CHECK_THROWS_AS(distance(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), Metric(MetricId::Quadratic, a)), Error);
  SimilarityMatrix bad = SimilarityMatrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(validate_similarity_matrix(bad), Error);
}

TEST_CASE("identity, symmetry and triangle inequality on random triples") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd p = normalize(random_vec(rng, 16), Normalization::L1);
    const Eigen::VectorXd q = normalize(random_vec(rng, 16), Normalization::L1);
    const Eigen::VectorXd r = normalize(random_vec(rng, 16), Normalization::L1);
    for (auto m : kAll) {
      if (m == MetricId::IntersectionL2) continue;
      CHECK(distance(p, p, m) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(distance(p, q, m) == doctest::Approx(distance(q, p, m)).epsilon(1e-12));
      CHECK(distance(p, q, m) >= 0.0);
    }
    for (auto m : {MetricId::Euclidean, MetricId::Manhattan})
      CHECK(distance(p, r, m) <= distance(p, q, m) + distance(q, r, m) + 1e-12);
    // intersection_l2 is defined on unit-L2 vectors
    const Eigen::VectorXd p2 = normalize(p, Normalization::L2), q2 = normalize(q, Normalization::L2);
    CHECK(distance(p2, p2, MetricId::IntersectionL2) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(distance(p2, q2, MetricId::IntersectionL2) == distance(q2, p2, MetricId::IntersectionL2));
  }
}

TEST_CASE("cosine is invariant to positive scaling") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd p = random_vec(rng, 10, -1, 1), q = random_vec(rng, 10, -1, 1);
    CHECK(distance(p, q, MetricId::Cosine) == doctest::Approx(distance(3.7 * p, 0.01 * q, MetricId::Cosine)));
  }
}

TEST_CASE("quadratic with identity equals squared euclidean") {
  std::mt19937_64 rng(23);
  const auto a = std::make_shared<const SimilarityMatrix>(SimilarityMatrix::Identity(12, 12));
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd p = random_vec(rng, 12), q = random_vec(rng, 12);
    const double e = distance(p, q, MetricId::Euclidean);
    CHECK(std::abs(distance(p, q, Metric(MetricId::Quadratic, a)) - e * e) < 1e-9);
  }
}

TEST_CASE("shipped HSV bin similarity") {
  const auto a = hsv72_bin_similarity();
  REQUIRE(a->rows() == 72);
  CHECK_NOTHROW(validate_similarity_matrix(*a));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*a);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);
  std::mt19937_64 rng(24);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd p = random_vec(rng, 72), q = random_vec(rng, 72);
    CHECK(distance(p, q, Metric(MetricId::Quadratic, a)) >= 0.0);
  }
}

TEST_CASE("euclidean and squared euclidean give the same argsort") {
  std::mt19937_64 rng(25);
  const Eigen::VectorXd q = random_vec(rng, 8);
  std::vector<Eigen::VectorXd> docs;
  for (int i = 0; i < 300; ++i) docs.push_back(random_vec(rng, 8));
  std::vector<int> a(docs.size()), b(docs.size());
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  std::stable_sort(a.begin(), a.end(), [&](int i, int j) {
    return distance(q, docs[i], MetricId::Euclidean) < distance(q, docs[j], MetricId::Euclidean);
  });
  std::stable_sort(b.begin(), b.end(), [&](int i, int j) { return (q - docs[i]).squaredNorm() < (q - docs[j]).squaredNorm(); });
  CHECK(a == b);
}
