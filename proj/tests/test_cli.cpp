#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tmr/cli.hpp"
#include "tmr/config.hpp"
#include "tmr/feature_io.hpp"

#include <fstream>
#include <sstream>

using namespace tmr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run tmr_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tmr");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

const char* kSmallRun = R"([run]
seed = 3
jobs = 2

[synth]
distractors = 14
groups = 2
members_per_group = 3

[codebook]
k = 12
max_iters = 10

[pipeline.hsv]
feature = hsv72

[pipeline.sift]
feature = sift

[pipeline.both]
fuse = hsv, sift
)";

}  // namespace

TEST_CASE("config parsing") {
  const fs::path base = "/data/run";
  const RunConfig cfg = parse_config(kSmallRun, base);
  CHECK(cfg.seed == 3);
  CHECK(cfg.jobs == 2);
  CHECK(cfg.synth.text_only + cfg.synth.figure_only + cfg.synth.combined == 14);
  CHECK(cfg.synth.seed == 3);
  CHECK(cfg.output == fs::path("/data/run/out"));
  CHECK(cfg.corpus == fs::path("/data/run/out/synth/corpus"));
  CHECK(cfg.manifest == fs::path("/data/run/out/synth/groups.csv"));
  REQUIRE(cfg.pipelines.size() == 3);
  CHECK(cfg.pipeline("sift").codebook.k == 12);
  CHECK(cfg.pipeline("hsv").metric == MetricId::IntersectionL1);
  CHECK(cfg.pipeline("hsv").normalization == Normalization::L1);
  CHECK(cfg.pipeline("both").is_fusion());
  CHECK(cfg.pipeline("sift").needs_codebook());
  CHECK(cfg.hash.size() == 16);
  CHECK(parse_config(kSmallRun, "/elsewhere").hash == cfg.hash);
  CHECK(parse_config(std::string(kSmallRun) + "[pipeline.x]\nfeature = gist\n", base).hash != cfg.hash);

  const RunConfig lbp = parse_config("[pipeline.t]\nfeature = lbp\nlbp_variant = riu2\nmetric = cosine\n", base);
  CHECK(lbp.pipeline("t").feature.lbp.variant == LbpVariant::RotationInvariantUniform);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("config errors") {
  const char* bad[] = {
      "[run]\nbogus = 1\n",
      "[nonsense]\nx = 1\n",
      "[pipeline.a]\nfeature = sparkles\n",
      "[pipeline.a]\nfeature = lbp\nmetric = quadratic\n",
      "[pipeline.a]\nfeature = sift\nmetric = euclidean\n",
      "[pipeline.a]\nfuse = b\n",
      "[pipeline.a]\nfuse = b\n[pipeline.b]\nfuse = a\n",
      "[pipeline.a]\nfeature = hsv72\nnormalization = l3\n",
      "[run]\njobs = -1\n",
      "[codebook]\nk = 0\n",
      "[pipeline.a]\nfeature = external\n",
      "[pipeline.a]\nmetric = cosine\n",
      "[synth]\nscale = maybe\n",
      "[run\n",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text, "/tmp"), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("usage errors exit 1") {
  CHECK(tmr_cli({}).code == kExitUsage);
  CHECK(tmr_cli({"frobnicate"}).code == kExitUsage);
  CHECK(tmr_cli({"extract"}).code == kExitUsage);
  CHECK(tmr_cli({"--help"}).code == kExitOk);
  const auto dir = test::temp_dir("cli_usage");
  const Run r = tmr_cli({"extract", "-c", write_config(dir, "[run]\nwhat = 1\n").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("config error") != std::string::npos);
  const Run missing = tmr_cli({"evaluate", "-c", write_config(dir, "[run]\ncorpus = c\n[pipeline.a]\nfeature = hsv72\n").string()});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("manifest") != std::string::npos);
}

TEST_CASE("empty corpus") {
  const auto dir = test::temp_dir("cli_empty");
  fs::create_directories(dir / "corpus");
  const Run r = tmr_cli({"extract", "-c", write_config(dir, "[run]\ncorpus = corpus\n[pipeline.a]\nfeature = hsv72\n").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("no images found") != std::string::npos);
}

TEST_CASE("partial extraction exits 3") {
  const auto dir = test::temp_dir("cli_partial");
  fs::create_directories(dir / "corpus");
  for (int i = 0; i < 10; ++i) save_png(test::random_rgb(20, 20, i), dir / "corpus" / ("img" + std::to_string(i) + ".png"));
  std::ofstream(dir / "corpus" / "broken.png") << "\x89PNG\r\n\x1a\nnot really";
  const fs::path cfg = write_config(dir, "[run]\ncorpus = corpus\n[pipeline.c]\nfeature = hsv72\n");
  const Run r = tmr_cli({"extract", "-c", cfg.string()});
  CHECK(r.code == kExitPartial);
  CHECK(r.err.find("skipped broken.png") != std::string::npos);
  const FeatureMatrix m = read_feature_matrix(dir / "out" / "features" / "c.corpus.tmfeat");
  CHECK(m.rows.rows() == 10);
  CHECK(m.rows.cols() == 72);
  CHECK(m.feature_id == "hsv72");
}

TEST_CASE("full command chain") {
  const auto dir = test::temp_dir("cli_chain");
  const std::string cfg = write_config(dir, kSmallRun).string();
  REQUIRE(tmr_cli({"synth", "-c", cfg}).code == kExitOk);
  REQUIRE(fs::exists(dir / "out" / "synth" / "groups.csv"));
  REQUIRE(tmr_cli({"extract", "-c", cfg}).code == kExitOk);
  REQUIRE(tmr_cli({"train-codebook", "-c", cfg}).code == kExitOk);
  REQUIRE(fs::exists(dir / "out" / "codebooks" / "sift.tmcb"));
  REQUIRE(tmr_cli({"index", "-c", cfg}).code == kExitOk);
  const Run ev = tmr_cli({"evaluate", "-c", cfg});
  REQUIRE(ev.code == kExitOk);
  for (const char* name : {"hsv", "sift", "both"}) {
    CHECK(fs::exists(dir / "out" / "reports" / (std::string(name) + ".rank.csv")));
    CHECK(fs::exists(dir / "out" / "reports" / (std::string(name) + ".pr.csv")));
  }
  const std::string summary = slurp(dir / "out" / "reports" / "summary.csv");
  CHECK(summary.find("Normalized average rank") != std::string::npos);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
  const std::string rank_csv = slurp(dir / "out" / "reports" / "hsv.rank.csv");
  CHECK(rank_csv.find("config=" + load_config(cfg).hash) != std::string::npos);
  CHECK(std::count(rank_csv.begin(), rank_csv.end(), '\n') == 2 + 6);

  SUBCASE("strip-text only removes rows") {
    const std::string plain = slurp(dir / "out" / "features" / "sift.corpus.tmfeat");
    REQUIRE(tmr_cli({"extract", "-c", cfg, "-p", "sift", "--strip-text"}).code == kExitOk);
    const auto stripped = read_local_features(dir / "out" / "features" / "sift.corpus.tmfeat");
    std::ofstream(dir / "plain.tmfeat", std::ios::binary) << plain;
    fs::copy_file(dir / "out" / "features" / "sift.corpus.tmfeat.docs", dir / "plain.tmfeat.docs");
    std::size_t total = 0;
    for (const auto& d : stripped) total += static_cast<std::size_t>(d.set.size());
    CHECK(total <= static_cast<std::size_t>(read_feature_matrix(dir / "plain.tmfeat").rows.rows()));
    CHECK(fs::exists(dir / "out" / "features" / "sift.corpus.textboxes.csv"));
  }
  SUBCASE("query") {
    const fs::path img = dir / "out" / "synth" / "corpus" / "d00003.png";
    const Run q = tmr_cli({"query", "-c", cfg, "-p", "hsv", "-i", img.string(), "-m", "3"});
    REQUIRE(q.code == kExitOk);
    CHECK(q.out.starts_with("d00003.png 0.000000\n"));
    CHECK(std::count(q.out.begin(), q.out.end(), '\n') == 3);
    const Run all = tmr_cli({"query", "-c", cfg, "-p", "sift", "-i", img.string(), "-m", "1000", "--csv"});
    REQUIRE(all.code == kExitOk);
    CHECK(all.out.starts_with("doc_id,score,rank\n"));
    CHECK(std::count(all.out.begin(), all.out.end(), '\n') == 1 + 14);

    std::ofstream(dir / "junk.png") << "garbage";
    const Run bad = tmr_cli({"query", "-c", cfg, "-p", "hsv", "-i", (dir / "junk.png").string()});
    CHECK(bad.code == kExitData);
    CHECK_FALSE(bad.err.empty());
  }
  SUBCASE("query without an index") {
    fs::remove_all(dir / "out" / "index");
    const fs::path img = dir / "out" / "synth" / "corpus" / "d00003.png";
    const Run q = tmr_cli({"query", "-c", cfg, "-p", "hsv", "-i", img.string()});
    CHECK(q.code != kExitOk);
    CHECK(q.err.find("index") != std::string::npos);
  }
}

TEST_CASE("fuse command") {
  const auto dir = test::temp_dir("cli_fuse");
  std::ofstream(dir / "a.csv") << "doc_id,score,rank\nA,0.1,1\nB,0.2,2\nC,0.3,3\n";
  std::ofstream(dir / "b.csv") << "rank,doc_id\n1,C\n2,B\n3,A\n";
  const Run r = tmr_cli({"fuse", (dir / "a.csv").string(), (dir / "b.csv").string(), "-o", (dir / "f.csv").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(slurp(dir / "f.csv") == "doc_id,score,rank\nA,0.750000,1\nC,0.750000,2\nB,1.000000,3\n");

  std::ofstream(dir / "c.csv") << "doc_id,rank\nA,1\nD,2\nC,3\n";
  CHECK(tmr_cli({"fuse", (dir / "a.csv").string(), (dir / "c.csv").string(), "-o", (dir / "g.csv").string()}).code ==
        kExitData);
  CHECK(tmr_cli({"fuse", (dir / "a.csv").string(), "-o", (dir / "g.csv").string()}).code == kExitUsage);
  std::ofstream(dir / "d.csv") << "doc,rank\nA,1\n";
  CHECK(tmr_cli({"fuse", (dir / "a.csv").string(), (dir / "d.csv").string(), "-o", (dir / "g.csv").string()}).code ==
        kExitData);
}

TEST_CASE("import-features command") {
  const auto dir = test::temp_dir("cli_import");
  write_feature_matrix({"cnn", {"x", "y"}, DescriptorMatrix::Random(2, 4096)}, dir / "f.tmfeat");
  const Run r = tmr_cli({"import-features", "-i", (dir / "f.tmfeat").string(), "-o", (dir / "idx" / "cnn.tmidx").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("dim 4096") != std::string::npos);
  CHECK(fs::exists(dir / "idx" / "cnn.tmidx"));
  std::ofstream(dir / "bad.tmfeat") << "TMFEAT1 cnn 3 2\nx\ny\n";
  CHECK(tmr_cli({"import-features", "-i", (dir / "bad.tmfeat").string(), "-o", (dir / "b.tmidx").string()}).code ==
        kExitData);
}
