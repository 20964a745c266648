#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tmr/codebook.hpp"
#include "tmr/metrics.hpp"

#include <fstream>
#include <set>

using namespace tmr;

namespace {

DescriptorMatrix random_rows(int m, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  DescriptorMatrix x(m, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
  return x;
}

DescriptorSet as_set(const DescriptorMatrix& rows) {
  DescriptorSet s;
  s.vectors = rows;
  s.keypoints.resize(static_cast<std::size_t>(rows.rows()));
  return s;
}

}  // namespace

TEST_CASE("k equal to m reproduces the samples") {
  const DescriptorMatrix x = random_rows(12, 5, 1);
  const auto r = train_kmeans(x, {.k = 12, .max_iters = 20, .seed = 3});
  CHECK(r.objective.back() == 0.0);
  std::set<std::vector<double>> a, b;
  for (Eigen::Index i = 0; i < 12; ++i) {
    const Eigen::RowVectorXd s = x.row(i).cast<double>(), c = r.codebook.centroids.row(i);
    a.insert({s.data(), s.data() + s.size()});
    b.insert({c.data(), c.data() + c.size()});
  }
  CHECK(a == b);
}

TEST_CASE("two separated clouds recover their means") {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> d(0.0f, 0.5f);
  DescriptorMatrix x(400, 3);
  for (Eigen::Index i = 0; i < 400; ++i)
    for (int c = 0; c < 3; ++c) x(i, c) = d(rng) + (i < 150 ? -20.0f : 30.0f);
  const Eigen::RowVectorXd m0 = x.topRows(150).cast<double>().colwise().mean();
  const Eigen::RowVectorXd m1 = x.bottomRows(250).cast<double>().colwise().mean();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = train_kmeans(x, {.k = 2, .max_iters = 50, .seed = seed});
    CHECK(r.converged);
    const auto& c = r.codebook.centroids;
    const bool first_is_0 = (c.row(0) - m0).norm() < (c.row(1) - m0).norm();
    CHECK((c.row(first_is_0 ? 0 : 1) - m0).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((c.row(first_is_0 ? 1 : 0) - m1).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("objective never increases and training is reproducible") {
  const DescriptorMatrix x = random_rows(600, 8, 2);
  const auto a = train_kmeans(x, {.k = 16, .max_iters = 40, .seed = 9, .jobs = 1});
  for (std::size_t i = 1; i < a.objective.size(); ++i) CHECK(a.objective[i] <= a.objective[i - 1]);
  const auto b = train_kmeans(x, {.k = 16, .max_iters = 40, .seed = 9, .jobs = 4});
  CHECK(a.codebook.centroids == b.codebook.centroids);
  CHECK(a.assignment == b.assignment);
  const auto c = train_kmeans(x, {.k = 16, .max_iters = 40, .seed = 10});
  CHECK(a.codebook.centroids != c.codebook.centroids);
}

TEST_CASE("duplicate samples force empty-cluster reseeding without failing") {
  DescriptorMatrix x = DescriptorMatrix::Zero(20, 2);
  x.row(19) << 1.0f, 1.0f;
  x.row(18) << 2.0f, 2.0f;
  const auto r = train_kmeans(x, {.k = 3, .max_iters = 10, .seed = 1});
  CHECK(r.objective.back() == 0.0);
  CHECK(r.codebook.centroids.allFinite());
}

TEST_CASE("k-means errors") {
  CHECK_THROWS_AS(train_kmeans(random_rows(3, 2, 1), {.k = 4}), Error);
  try {
    train_kmeans(random_rows(3, 2, 1), {.k = 4});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewSamples);
  }
  CHECK_THROWS_AS(train_kmeans(random_rows(3, 2, 1), {.k = 0}), Error);
}

TEST_CASE("quantize") {
  Codebook cb;
  cb.centroids = random_rows(10, 4, 3).cast<double>();
  DescriptorMatrix one(1, 4);
  one.row(0) = cb.centroids.row(7).cast<float>();
  CHECK(quantize(as_set(one), cb) == TermCounts{{7, 1}});
  CHECK(quantize(as_set(DescriptorMatrix(0, 4)), cb).empty());
  CHECK_THROWS_AS(quantize(as_set(DescriptorMatrix::Zero(2, 3)), cb), Error);

  // equidistant centroids: the lower id wins
  Codebook tie;
  tie.centroids = RowMatrix<double>(2, 1);
  tie.centroids << 1.0, -1.0;
  DescriptorMatrix zero = DescriptorMatrix::Zero(1, 1);
  CHECK(quantize(as_set(zero), tie) == TermCounts{{0, 1}});
}

TEST_CASE("quantize matches a brute-force nearest-centroid scan") {
  for (int k : {1, 7, 64}) {
    Codebook cb;
    cb.centroids = random_rows(k, 6, 10 + k).cast<double>();
    const DescriptorMatrix x = random_rows(500, 6, 20 + k);
    TermCounts oracle;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int best = 0;
      double bd = 1e300;
      for (int w = 0; w < k; ++w) {
        double d = 0;
        for (int c = 0; c < 6; ++c) d += (x(i, c) - cb.centroids(w, c)) * (x(i, c) - cb.centroids(w, c));
        if (d < bd) bd = d, best = w;
      }
      ++oracle[static_cast<WordId>(best)];
    }
    const TermCounts q = quantize(as_set(x), cb);
    CHECK(q == oracle);
    std::uint32_t total = 0;
    for (const auto& [w, n] : q) total += n;
    CHECK(total == 500);
  }
}

TEST_CASE("idf") {
  const std::vector<TermCounts> docs = {{{0, 2}, {1, 1}}, {{0, 1}, {2, 5}}};
  const IdfModel m = compute_idf(docs, 4);
  CHECK(m.doc_count == 2);
  CHECK(m.doc_freq == std::vector<std::uint64_t>{2, 1, 1, 0});
  CHECK(m.at(0) == 0.0);
  CHECK(m.at(1) == doctest::Approx(0.6931471805599453));
  CHECK(m.at(3) == 0.0);
  CHECK(m.at(999) == 0.0);
}

TEST_CASE("tf-idf weighting") {
  IdfModel idf;
  idf.idf = {std::log(2.0), std::log(2.0), 0.0};
  const BoVWVector v = tfidf_weight({{0, 1}, {1, 1}}, idf);
  REQUIRE(v.entries.size() == 2);
  CHECK(v.entries[0].second == doctest::Approx(0.3466).epsilon(1e-4));
  CHECK(v.entries[1].second == doctest::Approx(0.3466).epsilon(1e-4));
  CHECK(v.norm == doctest::Approx(0.4901).epsilon(1e-4));
  CHECK(v.norm == doctest::Approx(bovw_norm(v.entries)));

  CHECK(tfidf_weight({}, idf).entries.empty());
  CHECK(tfidf_weight({}, idf).norm == 0.0);
  CHECK(tfidf_weight({{2, 4}}, idf).entries.empty());

  const Eigen::VectorXd dense = densify(v, 3);
  CHECK(dense[2] == 0.0);
  CHECK(dense[0] == doctest::Approx(0.5 * std::log(2.0)));
}

TEST_CASE("cosine over tf-idf ignores a document's count scale") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> w(0, 29), n(1, 5);
  IdfModel idf;
  for (int i = 0; i < 30; ++i) idf.idf.push_back(0.1 * i);
  for (int t = 0; t < 100; ++t) {
    TermCounts a, b;
    for (int i = 0; i < 12; ++i) a[static_cast<WordId>(w(rng))] += static_cast<std::uint32_t>(n(rng));
    for (int i = 0; i < 12; ++i) b[static_cast<WordId>(w(rng))] += static_cast<std::uint32_t>(n(rng));
    TermCounts a3 = a;
    for (auto& [k, c] : a3) c *= 3;
    const double d1 = distance(densify(tfidf_weight(a, idf), 30), densify(tfidf_weight(b, idf), 30), MetricId::Cosine);
    const double d2 = distance(densify(tfidf_weight(a3, idf), 30), densify(tfidf_weight(b, idf), 30), MetricId::Cosine);
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-6));
  }
}

TEST_CASE("codebook persistence") {
  const auto dir = test::temp_dir("codebook");
  const auto r = train_kmeans(random_rows(200, 7, 4), {.k = 5, .seed = 77}, "sift");
  save_codebook(r.codebook, dir / "a.tmcb");
  const Codebook back = load_codebook(dir / "a.tmcb");
  CHECK(back.feature_id == "sift");
  CHECK(back.seed == 77);
  CHECK(back.k() == 5);
  CHECK(back.dim() == 7);
  CHECK(back.centroids == r.codebook.centroids.cast<float>().cast<double>());

  Codebook anon = back;
  anon.feature_id.clear();
  save_codebook(anon, dir / "b.tmcb");
  CHECK(load_codebook(dir / "b.tmcb").feature_id.empty());

  std::ofstream(dir / "bad.tmcb") << "TMCB1 sift 3 2 1\n" << "xx";
  CHECK_THROWS_AS(load_codebook(dir / "bad.tmcb"), Error);
  CHECK_THROWS_AS(load_codebook(dir / "missing.tmcb"), Error);
}

TEST_CASE("reservoir sampling") {
  const DescriptorMatrix a = random_rows(300, 3, 1), b = random_rows(500, 3, 2);
  const DescriptorMatrix* src[] = {&a, &b};
  const DescriptorMatrix s1 = reservoir_sample(src, 100, 5);
  CHECK(s1.rows() == 100);
  CHECK(s1 == reservoir_sample(src, 100, 5));
  CHECK(s1 != reservoir_sample(src, 100, 6));
  CHECK(reservoir_sample(src, 5000, 5).rows() == 800);
}
