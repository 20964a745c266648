#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tmr/evaluation.hpp"
#include "tmr/global_features.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

using namespace tmr;

namespace {

Ranking scored(const std::vector<double>& scores) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < scores.size(); ++i) ids.push_back("d" + std::to_string(1000 + i));
  return make_ranking("q", ids, scores);
}

// Scores drawn per (query, doc) from a seeded generator.
class RandomPipeline final : public RetrievalPipeline {
 public:
  RandomPipeline(std::size_t corpus, std::uint64_t seed) : seed_(seed) {
    for (std::size_t i = 0; i < corpus; ++i) ids_.push_back("c" + std::to_string(i));
  }
  const std::string& name() const override { return name_; }
  std::size_t corpus_size() const override { return ids_.size(); }
  Ranking rank(const std::string& query, std::span<const std::string> injected) const override {
    std::mt19937_64 rng(seed_ ^ std::hash<std::string>{}(query));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> ids = ids_;
    ids.insert(ids.end(), injected.begin(), injected.end());
    std::vector<double> s(ids.size());
    for (auto& x : s) x = u(rng);
    return make_ranking(query, ids, s);
  }

 private:
  std::string name_ = "random";
  std::vector<std::string> ids_;
  std::uint64_t seed_;
};

std::unordered_map<std::string, Eigen::VectorXd> hsv_of(const std::vector<std::pair<std::string, RasterImage>>& imgs) {
  std::unordered_map<std::string, Eigen::VectorXd> out;
  for (const auto& [id, img] : imgs) out[id] = color_histogram_hsv72(img).values;
  return out;
}

}  // namespace

TEST_CASE("resolve_ties examples") {
  const Ranking none = resolve_ties(scored({0.1, 0.2, 0.3}));
  for (int i = 0; i < 3; ++i) CHECK(none.entries[i].rank == i + 1.0);

  const Ranking mid = resolve_ties(scored({0.1, 0.2, 0.5, 0.5, 0.5, 0.9}));
  CHECK(mid.entries[2].rank == 4.0);
  CHECK(mid.entries[3].rank == 4.0);
  CHECK(mid.entries[4].rank == 4.0);
  CHECK(mid.entries[5].rank == 6.0);

  const Ranking all = resolve_ties(scored(std::vector<double>(7, 0.3)));
  for (const auto& e : all.entries) CHECK(e.rank == 4.0);
}

TEST_CASE("resolve_ties matches a naive oracle and preserves the rank sum") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::uniform_int_distribution<int> level(0, 1 + static_cast<int>(rng() % 10));
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& x : s) x = level(rng) * 0.25;
    const Ranking r = resolve_ties(scored(s));
    double sum = 0;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      // oracle: average of every 1-based position holding this score
      double pos_sum = 0;
      int count = 0;
      for (std::size_t j = 0; j < r.entries.size(); ++j)
        if (r.entries[j].score == r.entries[i].score) pos_sum += j + 1.0, ++count;
      CHECK(r.entries[i].rank == pos_sum / count);
      sum += r.entries[i].rank;
    }
    CHECK(sum == n * (n + 1) / 2.0);
  }
}

TEST_CASE("average and normalized rank") {
  CHECK(average_rank(std::vector<double>{1, 2}) == 1.5);
  CHECK(average_rank(std::vector<double>{10}) == 10.0);
  CHECK(average_rank(std::vector<double>{1, 2, 3, 4}) == 2.5);
  CHECK(normalized_rank(std::vector<double>{1, 2}, 100) == 0.0);
  CHECK(normalized_rank(std::vector<double>{99, 100}, 100) == doctest::Approx(0.98));
  CHECK_THROWS_AS(normalized_rank(std::vector<double>{}, 10), Error);
  CHECK_THROWS_AS(normalized_rank(std::vector<double>{1, 2, 3}, 2), Error);
  CHECK_THROWS_AS(average_rank(std::vector<double>{}), Error);

  std::mt19937_64 rng(32);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 5 + rng() % 500, n_rel = 1 + rng() % 5;
    std::vector<double> pool(n);
    std::iota(pool.begin(), pool.end(), 1.0);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<double> ranks(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_rel));
    const double nr = normalized_rank(ranks, n);
    const double k = static_cast<double>(n_rel);
    CHECK(nr == doctest::Approx((k * average_rank(ranks) - k * (k + 1) / 2) / (static_cast<double>(n) * k)));
    CHECK(nr >= 0.0);
    CHECK(nr <= 1.0);
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    bool perfect = true;
    for (std::size_t i = 0; i < sorted.size(); ++i) perfect = perfect && sorted[i] == i + 1.0;
    CHECK((nr == 0.0) == perfect);
  }
}

TEST_CASE("normalized rank of random retrieval is one half") {
  std::mt19937_64 rng(33);
  double total = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> pool(1000);
    std::iota(pool.begin(), pool.end(), 1.0);
    std::shuffle(pool.begin(), pool.end(), rng);
    total += normalized_rank(std::span<const double>(pool.data(), 10), 1000);
  }
  CHECK(std::abs(total / 200 - 0.5) < 0.03);
}

TEST_CASE("precision-recall curve") {
  const Ranking r = scored({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const auto top = precision_recall_curve(r, {"d1000", "d1001", "d1006", "d1007"});
  REQUIRE(top.size() == 4);
  CHECK(top[0].recall == 0.25);
  CHECK(top[0].precision == 1.0);
  CHECK(top[1].recall == 0.5);
  CHECK(top[1].precision == 1.0);
  CHECK(top.back().recall == 1.0);

  // 2 of 4 relevant in the top 5
  const auto five = precision_recall_curve(r, {"d1001", "d1004", "d1006", "d1007"});
  CHECK(five[1].recall == 0.5);
  CHECK(five[1].precision == doctest::Approx(0.4));

  const auto last = precision_recall_curve(r, {"d1006", "d1007"});
  CHECK(last.back().precision == doctest::Approx(2.0 / 8));

  std::mt19937_64 rng(34);
  for (int t = 0; t < 100; ++t) {
    std::unordered_set<std::string> rel;
    for (int i = 0; i < 8; ++i)
      if (rng() % 3 == 0) rel.insert("d" + std::to_string(1000 + i));
    if (rel.empty()) continue;
    const auto c = precision_recall_curve(r, rel);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].recall > c[i - 1].recall);
    CHECK(c.back().recall == 1.0);
  }
  CHECK_THROWS_AS(precision_recall_curve(r, {}), Error);
}

TEST_CASE("11-point interpolation") {
  const std::vector<PrPoint> c = {{0.25, 1.0}, {0.5, 0.5}, {0.75, 0.6}, {1.0, 0.4}};
  const InterpolatedPr ip = interpolate_pr(c);
  CHECK(ip[0] == 1.0);
  CHECK(ip[2] == 1.0);
  CHECK(ip[3] == 0.6);  // max precision at recall >= 0.3
  CHECK(ip[6] == 0.6);
  CHECK(ip[8] == 0.4);
  CHECK(ip[10] == 0.4);
}

TEST_CASE("injection with an empty corpus") {
  const std::unordered_map<std::string, Eigen::VectorXd> extra = {{"a", Eigen::Vector3d(1, 0, 0)},
                                                                  {"b", Eigen::Vector3d(0, 1, 0)}};
  const DensePipeline p("p", build_dense({}, Normalization::None), extra, MetricId::Cosine);
  const auto rows = inject_and_evaluate({"g", {"a", "b"}}, p);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.injected_ranks == std::vector<double>{1.0});
    CHECK(r.normalized_rank == 0.0);
    CHECK(r.rank == 1.0);
  }
  try {
    inject_and_evaluate({"g", {"a"}}, p);
    FAIL("expected GroupTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GroupTooSmall);
  }
}

TEST_CASE("random scoring gives normalized rank near one half") {
  double sum = 0;
  int n = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const RandomPipeline p(200, trial);
    for (const auto& r : inject_and_evaluate({"g", {"q0", "q1", "q2", "q3", "q4"}}, p)) sum += r.normalized_rank, ++n;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.1);
}

TEST_CASE("exact duplicates land at the top") {
  std::vector<std::pair<std::string, RasterImage>> corpus, members;
  for (int i = 0; i < 60; ++i) corpus.emplace_back("c" + std::to_string(i), test::random_rgb(16, 16, 500 + i));
  // a colour no corpus image is dominated by
  const RasterImage mark(16, 16, {10, 200, 40});
  for (int i = 0; i < 4; ++i) members.emplace_back("m" + std::to_string(i), mark);
  std::vector<DocDescriptor> docs;
  for (const auto& [id, img] : corpus) docs.push_back({id, color_histogram_hsv72(img)});
  const DensePipeline p("hsv72", build_dense(docs, Normalization::L1), hsv_of(members), MetricId::IntersectionL1);
  for (const auto& r : inject_and_evaluate({"g", {"m0", "m1", "m2", "m3"}}, p)) CHECK(r.normalized_rank < 0.01);
}

TEST_CASE("incremental injection equals a full rebuild") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0, 1);
  auto vec = [&] {
    Eigen::VectorXd v(10);
    for (auto& x : v) x = u(rng);
    return v;
  };
  std::vector<DocDescriptor> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back({"c" + std::to_string(i), {"f", vec()}});
  std::unordered_map<std::string, Eigen::VectorXd> extra;
  for (int i = 0; i < 4; ++i) extra["m" + std::to_string(i)] = vec();
  const DensePipeline p("p", build_dense(corpus, Normalization::L1), extra, MetricId::Euclidean);
  const std::vector<std::string> injected = {"m1", "m2", "m3"};

  std::vector<DocDescriptor> full = corpus;
  for (const auto& id : injected) full.push_back({id, {"f", extra[id]}});
  const Ranking rebuilt = query_dense(build_dense(full, Normalization::L1), {"f", extra["m0"]}, MetricId::Euclidean);
  const Ranking incremental = p.rank("m0", injected);
  REQUIRE(rebuilt.entries.size() == incremental.entries.size());
  for (std::size_t i = 0; i < rebuilt.entries.size(); ++i) {
    CHECK(rebuilt.entries[i].doc_id == incremental.entries[i].doc_id);
    CHECK(rebuilt.entries[i].score == incremental.entries[i].score);
  }

  // the inverted file, with the base corpus idf kept for the injected docs
  std::vector<DocBoVW> bovw;
  std::unordered_map<std::string, BoVWVector> bextra;
  std::uniform_int_distribution<int> w(0, 19);
  auto sparse = [&] {
    std::map<WordId, float> m;
    for (int j = 0; j < 6; ++j) m[static_cast<WordId>(w(rng))] = static_cast<float>(0.1 + u(rng));
    BoVWVector v;
    v.entries.assign(m.begin(), m.end());
    v.norm = bovw_norm(v.entries);
    return v;
  };
  for (int i = 0; i < 50; ++i) bovw.push_back({"c" + std::to_string(i), sparse()});
  for (int i = 0; i < 4; ++i) bextra["m" + std::to_string(i)] = sparse();
  const BovwPipeline bp("b", build_inverted(bovw, 20), bextra);
  std::vector<DocBoVW> bfull = bovw;
  for (const auto& id : injected) bfull.push_back({id, bextra[id]});
  const Ranking brebuilt = query_inverted(build_inverted(bfull, 20), bextra["m0"]);
  const Ranking bincr = bp.rank("m0", injected);
  for (std::size_t i = 0; i < brebuilt.entries.size(); ++i) {
    CHECK(brebuilt.entries[i].doc_id == bincr.entries[i].doc_id);
    CHECK(brebuilt.entries[i].score == bincr.entries[i].score);
  }
}

TEST_CASE("fusion pipeline of one part keeps the part's order") {
  const auto part = std::make_shared<RandomPipeline>(30, 4);
  const FusionPipeline f("f", {part});
  const std::vector<std::string> inj = {"x", "y"};
  const Ranking a = part->rank("q", inj), b = f.rank("q", inj);
  for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].doc_id == b.entries[i].doc_id);
}

TEST_CASE("evaluate aggregates and writes reports") {
  const RandomPipeline p(100, 9);
  const std::vector<QueryGroup> groups = {{"g1", {"a1", "a2", "a3"}}, {"g2", {"b1", "b2"}}};
  const EvalReport one = evaluate(groups, p, 1);
  const EvalReport four = evaluate(groups, p, 4);
  REQUIRE(one.queries.size() == 5);
  CHECK(one.queries[3].query_id == "b1");
  CHECK(one.queries[3].group_id == "g2");
  for (std::size_t i = 0; i < 5; ++i) CHECK(one.queries[i].normalized_rank == four.queries[i].normalized_rank);

  double mean = 0, var = 0;
  for (const auto& q : one.queries) mean += q.normalized_rank;
  mean /= 5;
  for (const auto& q : one.queries) var += (q.normalized_rank - mean) * (q.normalized_rank - mean);
  CHECK(one.mean_normalized_rank == doctest::Approx(mean));
  CHECK(one.std_normalized_rank == doctest::Approx(std::sqrt(var / 5)));
  CHECK(one.pr[0] >= one.pr[10]);

  std::ostringstream rank_csv, pr_csv, summary;
  write_rank_csv(rank_csv, one, "abc");
  write_pr_csv(pr_csv, one, "abc");
  const std::vector<EvalReport> reports = {one, one};
  write_summary(summary, reports, "abc");
  CHECK(rank_csv.str().starts_with("# pipeline=random config=abc\nquery_id,group_id,rank,normalized_rank\na1,g1,"));
  CHECK(pr_csv.str().starts_with("# pipeline=random config=abc\nrecall,precision\n0.000000,"));
  const std::string pr = pr_csv.str();
  CHECK(std::count(pr.begin(), pr.end(), '\n') == 13);
  const std::string s = summary.str();
  CHECK(s.find("Average rank") != std::string::npos);
  CHECK(s.find("Normalized average rank") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

TEST_CASE("group manifest") {
  const auto dir = test::temp_dir("manifest");
  {
    std::ofstream f(dir / "ok.csv");
    f << "group_id,image_path\ng2,x/a.png\r\ng1,b.png\n\ng2,c.png\n";
  }
  const auto groups = read_group_manifest(dir / "ok.csv");
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].group_id == "g2");
  CHECK(groups[0].members == std::vector<std::string>{"x/a.png", "c.png"});
  CHECK(groups[1].members == std::vector<std::string>{"b.png"});

  std::ofstream(dir / "dup.csv") << "group_id,image_path\ng1,a.png\ng2,a.png\n";
  std::ofstream(dir / "bad.csv") << "group_id,image_path\njust-one-field\n";
  auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind([&] { read_group_manifest(dir / "dup.csv"); }) == ErrorKind::DuplicateDoc);
  CHECK(kind([&] { read_group_manifest(dir / "bad.csv"); }) == ErrorKind::Format);
  CHECK_THROWS_AS(read_group_manifest(dir / "none.csv"), Error);
}
